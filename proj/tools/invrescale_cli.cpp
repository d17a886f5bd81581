#include <iostream>

#include <CLI11.hpp>

#include "invrescale/cli/commands.hpp"

namespace cli = invrescale::cli;

int main(int argc, char** argv) {
  CLI::App app{"Invertible image rescaling toolkit"};
  app.require_subcommand(1);

  cli::TrainOptions train;
  std::string train_resume, train_log;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint plus a metrics log");
  t->add_option("--config", train.config, "key = value config file")->required()->check(CLI::ExistingFile);
  t->add_option("--data", train.data, "directory of PNG images")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", train.out, "checkpoint to write")->required();
  t->add_option("--resume", train_resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  t->add_option("--log", train_log, "metrics log (default <out>.log)");

  std::string ckpt, in, out, json_out, data, expect;
  bool debug_true_hf = false;
  auto* d = app.add_subcommand("downscale", "Write the quantized LR PNG");
  d->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  d->add_option("--in", in)->required()->check(CLI::ExistingFile);
  d->add_option("--out", out)->required();

  auto* u = app.add_subcommand("upscale", "Reconstruct an HR PNG from an LR PNG");
  u->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  u->add_option("--in", in)->required()->check(CLI::ExistingFile);
  u->add_option("--out", out)->required();
  u->add_option("--expect-size", expect, "expected HR extent WxH; mismatch is an error");

  auto* r = app.add_subcommand("roundtrip", "Downscale and upscale in memory; write a JSON report");
  r->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  r->add_option("--in", in)->required()->check(CLI::ExistingFile);
  r->add_option("--json", json_out)->required();
  r->add_flag("--debug-true-hf", debug_true_hf, "inject the discarded channels instead of the detail prior");

  auto* e = app.add_subcommand("eval", "Per-image and mean metrics over a directory");
  e->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);
  e->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
  e->add_option("--json", json_out)->required();

  auto* c = app.add_subcommand("check", "Run the invariant suite against a checkpoint");
  c->add_option("--ckpt", ckpt)->required()->check(CLI::ExistingFile);

  std::size_t count = 8, size = 64;
  std::uint64_t seed = 0;
  auto* s = app.add_subcommand("synth", "Write a seeded synthetic PNG dataset");
  s->add_option("--out", out)->required();
  s->add_option("--count", count)->check(CLI::PositiveNumber);
  s->add_option("--size", size)->check(CLI::PositiveNumber);
  s->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (t->parsed()) {
      if (!train_resume.empty()) train.resume = train_resume;
      if (!train_log.empty()) train.log = train_log;
      return cli::cmd_train(train);
    }
    if (d->parsed()) return cli::cmd_downscale(ckpt, in, out);
    if (u->parsed()) {
      std::optional<cli::Extent> ex;
      if (!expect.empty()) ex = cli::parse_extent(expect);
      return cli::cmd_upscale(ckpt, in, out, ex);
    }
    if (r->parsed()) return cli::cmd_roundtrip(ckpt, in, json_out, debug_true_hf);
    if (e->parsed()) return cli::cmd_eval(ckpt, data, json_out);
    if (c->parsed()) return cli::cmd_check(ckpt);
    if (s->parsed()) return cli::cmd_synth(out, count, size, seed);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
