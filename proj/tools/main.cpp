#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <iostream>

#include "nsl/experiment.hpp"

namespace {

int print_caps(const nsl::ExperimentConfig& cfg) {
  const auto built = nsl::build_model(cfg);
  const auto c = nsl::regularity_constants(built.model);
  std::cout << "d=" << c.d << " L_F=" << c.L_F << " L_gradF=" << c.L_gradF << " m=" << c.m
            << " L_G=" << c.L_G << " |K|^2=" << c.normK_sq << '\n';
  int bad = 0;
  for (const auto& r : nsl::step_caps(cfg, built.model)) {
    std::cout << std::left << std::setw(24) << r.sampler << " tau=" << r.tau << "  "
              << r.rule << "  cap=" << (std::isinf(r.cap) ? std::string("inf") : std::to_string(r.cap))
              << (r.ok ? "  ok" : "  VIOLATED") << '\n';
    bad += !r.ok;
  }
  return bad ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin samplers for non-smooth potentials"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config or preset");
  run->add_option("config", config_path, "config.json, or preset:<name>")->required();
  run->add_option("-o,--output", out_dir, "override output_dir");

  auto* val = app.add_subcommand("validate", "check a config without sampling");
  val->add_option("config", config_path)->required();

  auto* caps = app.add_subcommand("caps", "print every step-size cap for a config");
  caps->add_option("config", config_path)->required();

  auto* presets = app.add_subcommand("presets", "built-in experiment presets");
  presets->require_subcommand(1);
  presets->add_subcommand("list", "list preset names");
  std::string preset_name;
  auto* show = presets->add_subcommand("show", "print a preset as a JSON config");
  show->add_option("name", preset_name)->required();

  CLI11_PARSE(app, argc, argv);

  const auto load = [&]() {
    const std::string prefix = "preset:";
    if (config_path.rfind(prefix, 0) == 0) return nsl::preset(config_path.substr(prefix.size()));
    return nsl::load_config(config_path);
  };

  try {
    if (*run) {
      auto cfg = load();
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto summary = nsl::run_experiment(cfg);
      std::cout << "wrote " << cfg.output_dir << " (" << summary["wall_seconds"].get<double>()
                << " s)\n";
      for (const auto& [label, s] : summary["samplers"].items()) {
        std::cout << "  " << std::left << std::setw(24) << label
                  << " s/1000 it: " << s["seconds_per_1000"].get<double>() << '\n';
      }
    } else if (*val) {
      nsl::validate(load());
      std::cout << "ok\n";
    } else if (*caps) {
      return print_caps(load());
    } else if (presets->got_subcommand("list")) {
      for (const auto& n : nsl::preset_names()) std::cout << n << '\n';
    } else if (*show) {
      std::cout << nsl::to_json(nsl::preset(preset_name)).dump(2) << '\n';
    }
  } catch (const nsl::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
