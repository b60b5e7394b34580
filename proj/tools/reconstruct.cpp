// reconstruct: turn a scene manifest of historical facade photos into a
// textured glTF city-block model. Thin shell over the facade3d C API.

#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "facade3d.h"

int main(int argc, char** argv) {
  CLI::App app{"single-photo facade rectification and city-block modeling"};

  std::string manifest;
  std::string out_dir;
  std::string backend = "diffusion";
  std::string metrics_path;
  std::uint64_t seed = 0;
  bool debug = false;
  bool no_dedup = false;
  int workers = 0;

  app.add_option("manifest", manifest, "scene manifest JSON")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_flag("--debug", debug, "write per-stage debug artifacts");
  app.add_option("--seed", seed, "seed for all randomized stages");
  app.add_option("--backend", backend, "inpainting backend: diffusion|patch")
      ->check(CLI::IsMember({"diffusion", "patch"}));
  app.add_flag("--no-dedup", no_dedup, "disable vanishing-point search-space reduction");
  app.add_option("--metrics", metrics_path, "write stage metrics JSON to this file");
  app.add_option("--workers", workers, "worker threads (0 = hardware concurrency)");
  CLI11_PARSE(app, argc, argv);

  f3d_run_options options{};
  options.manifest_path = manifest.c_str();
  options.out_dir = out_dir.c_str();
  options.debug = debug ? 1 : 0;
  options.seed = seed;
  options.backend = backend.c_str();
  options.no_dedup = no_dedup ? 1 : 0;
  options.metrics = metrics_path.empty() ? 0 : 1;
  options.workers = workers;

  char* report_json = nullptr;
  f3d_status status = f3d_run_pipeline(&options, &report_json);

  if (status != F3D_OK && status != F3D_PARTIAL) {
    std::fprintf(stderr, "error: %s\n", f3d_last_error());
    return 1;
  }

  if (report_json) {
    try {
      auto report = nlohmann::json::parse(report_json);
      for (const auto& f : report.value("facades", nlohmann::json::array())) {
        if (f.value("ok", false))
          std::printf("facade %-12s ok   aspect %.3f  %0.1fm x %0.1fm%s\n",
                      f.value("id", "?").c_str(), f.value("aspect", 0.0),
                      f.value("world_width", 0.0), f.value("world_height", 0.0),
                      f.value("approximate_focal", false) ? "  (approx focal)" : "");
        else
          std::printf("facade %-12s FAIL %s\n", f.value("id", "?").c_str(),
                      f.value("error", "").c_str());
      }
      for (const auto& b : report.value("blocks", nlohmann::json::array()))
        std::printf("block  %-12s %s  cuboids %d  closure gap %.3fm%s\n",
                    b.value("id", "?").c_str(), b.value("ok", false) ? "ok  " : "FAIL",
                    b.value("cuboid_count", 0), b.value("closure_gap_m", 0.0),
                    b.value("adjusted", false) ? " (redistributed)" : "");
      for (const auto& w : report.value("warnings", nlohmann::json::array()))
        std::printf("warning: %s\n", w.get<std::string>().c_str());
      if (!metrics_path.empty()) {
        std::ofstream mf(metrics_path);
        nlohmann::json metrics{{"vp_reduction", report.value("vp_reduction", nlohmann::json())},
                               {"facades", nlohmann::json::array()}};
        for (const auto& f : report.value("facades", nlohmann::json::array()))
          metrics["facades"].push_back({{"id", f.value("id", "?")},
                                        {"timings_ms", f.value("timings_ms", nlohmann::json())},
                                        {"inpaint", f.value("inpaint", nlohmann::json())}});
        mf << metrics.dump(2) << "\n";
        std::printf("metrics: %s\n", metrics_path.c_str());
      }
    } catch (const std::exception&) {
      std::printf("%s\n", report_json);
    }
    f3d_string_free(report_json);
  }
  std::printf("report: %s/report.json\n", out_dir.c_str());
  std::printf("model:  %s/model/scene.gltf\n", out_dir.c_str());
  if (status == F3D_PARTIAL) {
    std::fprintf(stderr, "warning: some facades failed; see report.json\n");
    return 2;
  }
  return 0;
}
