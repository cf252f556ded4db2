// poolforge command-line tool.
//
//   poolforge train --config <file> [--resume <ckpt>]
//   poolforge eval --ckpt <file> --data <manifest> --out <predictions>
//   poolforge gen-data --spec <file> --count N --out <dir>
//   poolforge grad-check --arch <tag> [--seed S]
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>

#include "poolforge/data/record_io.hpp"
#include "poolforge/data/synthetic.hpp"
#include "poolforge/error.hpp"
#include "poolforge/eval/gap.hpp"
#include "poolforge/models/checkpoint.hpp"
#include "poolforge/models/model.hpp"
#include "poolforge/runtime.hpp"
#include "poolforge/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace poolforge;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kNumericError = 4;

constexpr std::size_t kRecordsPerShard = 256;

int cmd_train(const fs::path& config_path, const std::optional<fs::path>& resume) {
  const auto config = train::TrainConfig::from_file(config_path);
  train::run_training(config, resume, std::cout);
  return kOk;
}

int cmd_eval(const fs::path& ckpt_path, const fs::path& manifest, const fs::path& out) {
  const auto ckpt = models::load_checkpoint(ckpt_path);
  const auto records = data::load_manifest(manifest);
  const auto preds = train::evaluate_checkpoint(ckpt, records);
  eval::write_predictions(out.string(), preds);
  const auto report = eval::make_report(preds);
  std::cout << report.to_json() << '\n';
  if (report.no_positives) std::cerr << "warning: no ground-truth labels; gap reported as 0\n";
  return kOk;
}

int cmd_gen_data(const fs::path& spec_path, std::size_t count, const fs::path& out) {
  std::string text;
  try {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("cannot read spec " + spec_path.string());
    text.assign(std::istreambuf_iterator<char>(in), {});
  } catch (const std::ios_base::failure& e) {
    throw ConfigError(e.what());
  }
  const auto spec = data::SyntheticSpec::from_json(text);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create " + out.string() + ": " + ec.message());

  data::CorpusGenerator gen(spec);
  std::vector<fs::path> shards;
  for (std::size_t first = 0; first < count; first += kRecordsPerShard) {
    std::vector<data::VideoRecord> batch;
    for (std::size_t i = first; i < std::min(count, first + kRecordsPerShard); ++i) batch.push_back(gen.generate(i));
    char name[32];
    std::snprintf(name, sizeof name, "shard_%05zu.pfrc", first / kRecordsPerShard);
    data::write_records(out / name, batch);
    shards.emplace_back(name);
  }
  data::write_manifest(out / "manifest.txt", shards);
  std::cout << "wrote " << count << " records in " << shards.size() << " shard(s) to " << out.string() << '\n';
  return kOk;
}

int cmd_grad_check(const std::string& tag, std::uint64_t seed) {
  const auto config = models::toy_config(models::parse_architecture(tag));
  const auto report = models::grad_check_model(config, seed, GradCheckOptions::composite());
  std::cout << tag << " seed " << seed << ": " << report.summary() << '\n';
  return report.passed ? kOk : kNumericError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poolforge: trainable pooling for video classification"};
  app.require_subcommand(1);

  fs::path config_path, resume_path;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a JSON config");
  train_cmd->add_option("--config", config_path, "Training config (JSON)")->required();
  train_cmd->add_option("--resume", resume_path, "Checkpoint to resume from");

  fs::path ckpt_path, data_path, out_path;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and write predictions");
  eval_cmd->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "Record manifest")->required();
  eval_cmd->add_option("--out", out_path, "Predictions output file")->required();

  fs::path spec_path, gen_out;
  std::size_t count = 0;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen_cmd->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
  gen_cmd->add_option("--count", count, "Number of videos")->required();
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  std::string arch;
  std::uint64_t seed = 0;
  auto* gc_cmd = app.add_subcommand("grad-check", "Finite-difference check of a toy-sized model");
  gc_cmd->add_option("--arch", arch, "Architecture tag")->required();
  gc_cmd->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (verify_mode()) std::cerr << "verification mode: sequential, deterministic execution\n";
    if (*train_cmd)
      return cmd_train(config_path, train_cmd->count("--resume") ? std::optional(resume_path) : std::nullopt);
    if (*eval_cmd) return cmd_eval(ckpt_path, data_path, out_path);
    if (*gen_cmd) return cmd_gen_data(spec_path, count, gen_out);
    if (*gc_cmd) return cmd_grad_check(arch, seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
