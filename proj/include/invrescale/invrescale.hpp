#pragma once

#include "invrescale/errors.hpp"
#include "invrescale/numerics/autograd.hpp"
#include "invrescale/numerics/gradcheck.hpp"
#include "invrescale/numerics/linalg.hpp"
#include "invrescale/numerics/rng.hpp"
#include "invrescale/numerics/tensor.hpp"
#include "invrescale/transforms/haar.hpp"
#include "invrescale/transforms/lrt.hpp"
#include "invrescale/transforms/pixel_shuffle.hpp"
#include "invrescale/invnet/adp.hpp"
#include "invrescale/invnet/codec.hpp"
#include "invrescale/invnet/coupling.hpp"
#include "invrescale/invnet/model.hpp"
#include "invrescale/invnet/quantize.hpp"
#include "invrescale/refiner/denoise.hpp"
#include "invrescale/refiner/predictor.hpp"
#include "invrescale/refiner/pse.hpp"
#include "invrescale/refiner/schedule.hpp"
#include "invrescale/refiner/teacher.hpp"
#include "invrescale/training/checkpoint.hpp"
#include "invrescale/training/losses.hpp"
#include "invrescale/training/optimizer.hpp"
#include "invrescale/training/state.hpp"
#include "invrescale/training/trainer.hpp"
#include "invrescale/imaging/convert.hpp"
#include "invrescale/imaging/crop.hpp"
#include "invrescale/imaging/metrics.hpp"
#include "invrescale/imaging/png.hpp"
#include "invrescale/imaging/resize.hpp"
#include "invrescale/imaging/synth.hpp"
