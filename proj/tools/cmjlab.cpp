#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmjlab/cmj.hpp"
#include "cmjlab/format.hpp"
#include "cmjlab/limit_gaussian.hpp"
#include "cmjlab/parallel.hpp"
#include "cmjlab/recursive_tree.hpp"
#include "cmjlab/renewal.hpp"
#include "cmjlab/verify.hpp"

namespace fs = std::filesystem;
using namespace cmjlab;

namespace {

constexpr const char* kOutEnv = "CMJLAB_OUT";

// JSON config files: top-level keys set global options, an object keyed by a
// subcommand name sets that subcommand's options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(value, p, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& e : value) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::uint64_t seed = 42;
  int workers = 0;
  std::string out;
};

std::optional<fs::path> output_dir(const Globals& g) {
  if (!g.out.empty()) return fs::path(g.out);
  if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return fs::path(env);
  return std::nullopt;
}

// Writes each artifact into the output directory, or to stdout without one.
void emit(const Globals& g, const std::vector<std::pair<std::string, std::string>>& artifacts) {
  const auto dir = output_dir(g);
  if (!dir) {
    for (const auto& [name, content] : artifacts) std::cout << content;
    return;
  }
  fs::create_directories(*dir);
  for (const auto& [name, content] : artifacts) {
    write_file_atomic(*dir / name, content);
    std::cerr << "wrote " << (*dir / name).string() << "\n";
  }
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad grid value '" + item + "'");
    grid.push_back(v);
  }
  if (grid.empty()) throw std::invalid_argument("empty grid");
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random recursive tree profiles, CMJ processes and their Gaussian limits"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; command-line flags take precedence");

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--workers", g.workers, "OpenMP worker count (default: OpenMP setting)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, std::string("Output directory (default: $") + kOutEnv + ", else stdout)");

  // gen-tree
  auto* gen = app.add_subcommand("gen-tree", "Uniform random recursive tree with n + 1 vertices");
  std::uint64_t gen_n = 10;
  bool gen_profile = false;
  gen->add_option("--n", gen_n, "Tree has n + 1 vertices")->required()->check(CLI::NonNegativeNumber);
  gen->add_flag("--profile", gen_profile, "Also emit the level profile");

  // profile-path
  auto* path = app.add_subcommand("profile-path", "Profiles of one growing tree at sizes floor(n^t)");
  std::uint64_t path_n = 1000;
  std::string path_grid = "0.5,1";
  std::size_t path_k = 2;
  path->add_option("--n", path_n, "Base size")->capture_default_str()->check(CLI::PositiveNumber);
  path->add_option("--grid", path_grid, "Comma-separated increasing t grid")->capture_default_str();
  path->add_option("--k-max", path_k, "Highest level recorded")->capture_default_str()->check(CLI::PositiveNumber);

  // cmj
  auto* cmj = app.add_subcommand("cmj", "One CMJ trajectory, or the embedded tree with --embedded");
  std::string cmj_dist = "exp(1)";
  double cmj_t = 10.0;
  std::size_t cmj_k = 2;
  std::size_t cmj_embedded = 0;
  cmj->add_option("--dist", cmj_dist, "Increment law: exp(r), gamma(a,b), uniform(a,b), det(d)")->capture_default_str();
  cmj->add_option("--t", cmj_t, "Horizon")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmj->add_option("--k-max", cmj_k, "Highest generation")->capture_default_str()->check(CLI::PositiveNumber);
  cmj->add_option("--embedded", cmj_embedded, "Run the exponential process until n births instead");

  // renewal-table
  auto* ren = app.add_subcommand("renewal-table", "Grid values of U, U_2, ..., U_k");
  ren->set_help_flag("--help", "Print this help message and exit");
  std::string ren_dist = "exp(1)";
  double ren_t = 10.0;
  double ren_h = 0.01;
  std::size_t ren_k = 2;
  ren->add_option("--dist", ren_dist, "Increment law")->capture_default_str();
  ren->add_option("--t", ren_t, "Horizon")->capture_default_str()->check(CLI::PositiveNumber);
  ren->add_option("--h", ren_h, "Grid step")->capture_default_str()->check(CLI::PositiveNumber);
  ren->add_option("--k-max", ren_k, "Highest convolution power")->capture_default_str()->check(CLI::PositiveNumber);

  // limit-sample
  auto* lim = app.add_subcommand("limit-sample", "Exact draws of (R_k(t)) on a grid");
  unsigned lim_k = 2;
  std::string lim_grid = "0.5,1";
  std::size_t lim_reps = 1000;
  lim->add_option("--k-max", lim_k, "Highest level")->capture_default_str()->check(CLI::PositiveNumber);
  lim->add_option("--grid", lim_grid, "Comma-separated time grid")->capture_default_str();
  lim->add_option("--reps", lim_reps, "Number of draws")->capture_default_str()->check(CLI::PositiveNumber);

  // covariance
  auto* cov = app.add_subcommand("covariance", "Covariance of the limit processes");
  unsigned cov_k = 1, cov_l = 1;
  double cov_s = 1.0, cov_u = 1.0;
  unsigned cov_kmax = 0;
  std::string cov_grid;
  cov->add_option("--k", cov_k, "Level of the first process")->check(CLI::PositiveNumber);
  cov->add_option("--l", cov_l, "Level of the second process")->check(CLI::PositiveNumber);
  cov->add_option("--s", cov_s, "First time")->check(CLI::NonNegativeNumber);
  cov->add_option("--u", cov_u, "Second time")->check(CLI::NonNegativeNumber);
  cov->add_option("--k-max", cov_kmax, "Emit the full matrix over {k <= k-max} x grid");
  cov->add_option("--grid", cov_grid, "Time grid for --k-max");

  // verify
  auto* ver = app.add_subcommand("verify", "Run the acceptance suite and write manifest.json");
  bool ver_quick = false;
  ver->add_flag("--quick", ver_quick, "Reduced replicate counts with widened budgets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (g.workers > 0) set_workers(g.workers);

  try {
    if (*gen) {
      RngStream rng(g.seed, 0);
      const RecursiveTree tree = generate_rrt(gen_n + 1, rng);
      std::vector<std::pair<std::string, std::string>> out{{"tree.csv", tree_csv(tree)}};
      if (gen_profile) out.emplace_back("profile.csv", profile_csv(profile(tree)));
      emit(g, out);
    } else if (*path) {
      RngStream rng(g.seed, 0);
      const std::vector<double> grid = parse_grid(path_grid);
      emit(g, {{"profile_path.csv", profile_path_csv(grow_and_record(path_n, grid, path_k, rng))}});
    } else if (*cmj) {
      RngStream rng(g.seed, 0);
      if (cmj_embedded > 0) {
        emit(g, {{"embedded_tree.csv", embedded_tree_csv(simulate_embedded_rrt(cmj_embedded, rng))}});
      } else {
        const IncrementDistribution d = make_distribution(cmj_dist);
        emit(g, {{"trajectory.csv", trajectory_csv(simulate_cmj(d, cmj_t, cmj_k, rng))}});
      }
    } else if (*ren) {
      const IncrementDistribution d = make_distribution(ren_dist);
      emit(g, {{"renewal_table.csv", renewal_table_csv(build_renewal_table(d, ren_t, ren_h, ren_k))}});
    } else if (*lim) {
      const std::vector<double> grid = parse_grid(lim_grid);
      const CovMatrix m = build_cov_matrix(lim_k, grid);
      const GaussianGridSample s = sample_limit(m, lim_reps, g.seed);
      emit(g, {{"limit_samples.csv", samples_csv(s)}});
    } else if (*cov) {
      if (cov_kmax > 0) {
        if (cov_grid.empty()) throw CLI::ValidationError("--k-max", "requires --grid");
        const std::vector<double> grid = parse_grid(cov_grid);
        emit(g, {{"covariance.csv", cov_matrix_csv(build_cov_matrix(cov_kmax, grid))}});
      } else {
        emit(g, {{"covariance.txt", format_g17(cov_rkl(cov_k, cov_l, cov_s, cov_u)) + "\n"}});
      }
    } else if (*ver) {
      VerifyConfig config;
      config.seed = g.seed;
      config.quick = ver_quick;
      const auto start = std::chrono::steady_clock::now();
      const RunManifest m = verify_suite(config, [](const TestResult& r) {
        std::cerr << result_line(r) << "\n";
      });
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      nlohmann::ordered_json run;
      run["version"] = kVersion;
      run["seed"] = g.seed;
      run["workers"] = current_workers();
      run["wall_seconds"] = wall;
      run["gating_failures"] = m.failures();
      emit(g, {{"manifest.json", manifest_json(m)}, {"run_info.json", run.dump(2) + "\n"}});
      std::cerr << (m.passed() ? "all gating checks passed" : "gating checks failed: ") <<
          (m.passed() ? "" : std::to_string(m.failures())) << "\n";
      return m.passed() ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
