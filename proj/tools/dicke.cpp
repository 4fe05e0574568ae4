// dicke — reproducible experiment runner for the single-mode spin-boson
// model: sector spectra, the doublet-degeneracy phase diagram with
// finite-size scaling, mean-field energy surfaces, and post-quench
// steady-state symmetry classification. Emits plot-ready CSV plus a JSON
// sidecar carrying the full run configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dicke/dicke.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// JSON config files mirror flag names with dashes replaced by underscores.
// Scalars configure the main app; one nested object per subcommand
// configures that subcommand. A top-level "run_config" object (as written
// to sidecars) is unwrapped, so a sidecar doubles as a config file.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json root = json::parse(input);
        if (root.is_object() && root.contains("run_config")) root = root.at("run_config");
        if (!root.is_object()) throw CLI::FileError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : root.items()) {
            if (key == "subcommand") continue;
            if (value.is_array() && value.empty()) continue;
            if (value.is_object()) {
                for (const auto& [sub_key, sub_value] : value.items()) {
                    if (sub_value.is_array() && sub_value.empty()) continue;
                    items.push_back(make_item({key}, sub_key, sub_value));
                }
            } else {
                items.push_back(make_item({}, key, value));
            }
        }
        return items;
    }

private:
    static CLI::ConfigItem make_item(std::vector<std::string> parents, std::string key,
                                     const json& value) {
        CLI::ConfigItem item;
        item.parents = std::move(parents);
        for (auto& ch : key)
            if (ch == '_') ch = '-';
        item.name = std::move(key);
        if (value.is_array()) {
            for (const auto& v : value) item.inputs.push_back(scalar_to_string(v));
        } else {
            item.inputs.push_back(scalar_to_string(value));
        }
        return item;
    }

    static std::string scalar_to_string(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }
};

struct CommonOptions {
    double omega = 1.0;
    double omega0 = 1.0;
    int n_atoms = 0;
    int n_max = -1; // -1: choose automatically (heuristic + convergence search)
    std::size_t dim_limit = 20000;
    double k_err = 1e-6;
    std::string output_dir = ".";
    std::string cache_dir = "./cache";
    bool no_cache = false;
    int threads = dicke::par::hardware_threads();
    bool force = false;
    bool dry_run = false;
};

struct SpectrumOptions {
    double lambda = 0.0;
    std::string sector = "both";
    bool with_vectors = false;
};

struct PhaseDiagramOptions {
    double lambda_min = 0.6, lambda_max = 2.0, lambda_step = 0.1;
    std::vector<double> lambdas; // explicit grid overrides the range
    double window_top = 1.0;
    bool no_verify_cutoff = false;
};

struct ScalingOptions {
    std::vector<int> n_list = {10, 16, 24, 32, 40};
    double lambda_min = 0.6, lambda_max = 2.0, lambda_step = 0.1;
    double window_top = 1.0;
    bool no_verify_cutoff = false;
    bool free_asymptote = false;
};

struct SurfaceOptions {
    double lambda = 0.0;
    double mu_min = -1.5, mu_max = 1.5;
    double nu_min = -3.0, nu_max = 3.0;
    int resolution = 512;
};

struct QuenchMapOptions {
    double lambda_i_min = 0.6, lambda_i_max = 2.5;
    double lambda_f_min = 0.0, lambda_f_max = 2.5;
    int resolution = 256;
};

struct QuenchOptions {
    double lambda_i = 0.0, lambda_f = 0.0;
    int branch = 1;
    std::string observable = "Jx";
    double t_max = 200.0;
    int samples = 4000;
    double window_fraction = 0.5;
    double threshold = 0.05; // in units of J
    double drop_tol = 1e-14;
};

dicke::ModelParams make_params(const CommonOptions& c, double lambda, int n_max) {
    dicke::ModelParams p;
    p.omega = c.omega;
    p.omega0 = c.omega0;
    p.lambda = lambda;
    p.n_atoms = c.n_atoms;
    p.n_max = n_max;
    p.dim_limit = c.dim_limit;
    p.validate();
    return p;
}

std::vector<double> lambda_grid_from(double lo, double hi, double step,
                                     const std::vector<double>& explicit_grid) {
    if (!explicit_grid.empty()) return explicit_grid;
    if (!(step > 0.0)) throw std::invalid_argument("lambda step must be > 0");
    std::vector<double> grid;
    for (int k = 0;; ++k) {
        const double v = lo + k * step;
        if (v > hi + 0.5 * step) break;
        grid.push_back(v);
    }
    if (grid.empty()) throw std::invalid_argument("empty lambda grid");
    return grid;
}

class OutputSet {
public:
    OutputSet(const CommonOptions& common, std::string subcommand)
        : dir_(common.output_dir), force_(common.force), dry_run_(common.dry_run),
          subcommand_(std::move(subcommand)), start_(std::chrono::steady_clock::now()) {
        sidecar_path_ = reserve("run.json");
    }

    // Registration happens before any computation, so clashes fail fast.
    // Dry runs skip the clash check: they validate configuration only.
    fs::path reserve(const std::string& name) {
        const fs::path path = dir_ / name;
        if (!dry_run_ && !force_ && fs::exists(path))
            throw dicke::IoError("output file exists (use --force to overwrite): " + path.string());
        reserved_.push_back(path);
        return path;
    }

    bool dry_run() const { return dry_run_; }

    std::ofstream open(const fs::path& path) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw dicke::IoError("cannot create output directory " + dir_.string());
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw dicke::IoError("cannot open " + path.string() + " for writing");
        return out;
    }

    void finish(json run_config, json results) {
        if (dry_run_) return;
        json sidecar;
        sidecar["subcommand"] = subcommand_;
        sidecar["run_config"] = std::move(run_config);
        sidecar["results"] = std::move(results);
        sidecar["timings"]["total_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        sidecar["library_version"] = dicke::library_version;
        auto out = open(sidecar_path_);
        out << sidecar.dump(2) << '\n';
        if (!out) throw dicke::IoError("short write to " + sidecar_path_.string());
    }

private:
    fs::path dir_;
    bool force_;
    bool dry_run_;
    std::string subcommand_;
    std::chrono::steady_clock::time_point start_;
    fs::path sidecar_path_;
    std::vector<fs::path> reserved_;
};

json common_config_json(const CommonOptions& c) {
    json j;
    j["omega"] = c.omega;
    j["omega0"] = c.omega0;
    j["n_atoms"] = c.n_atoms;
    j["n_max"] = c.n_max;
    j["dim_limit"] = c.dim_limit;
    j["k_err"] = c.k_err;
    j["output_dir"] = c.output_dir;
    j["cache_dir"] = c.cache_dir;
    j["no_cache"] = c.no_cache;
    j["threads"] = c.threads;
    j["force"] = c.force;
    return j;
}

std::optional<dicke::cache::SpectrumCache> open_cache(const CommonOptions& c) {
    if (c.no_cache) return std::nullopt;
    return dicke::cache::SpectrumCache(c.cache_dir);
}

// ---------------------------------------------------------------------------
// subcommand runners

void run_spectrum(const CommonOptions& common, const SpectrumOptions& opt) {
    OutputSet out(common, "spectrum");
    const auto csv_path = out.reserve("spectrum.csv");
    if (out.dry_run()) return;

    const int n_max = common.n_max >= 0
                          ? common.n_max
                          : dicke::phase::heuristic_cutoff(make_params(common, opt.lambda, 0));
    const auto p = make_params(common, opt.lambda, n_max);
    auto cache = open_cache(common);
    const auto* cache_ptr = cache ? &*cache : nullptr;

    std::vector<dicke::Sector> sectors;
    if (opt.sector == "both")
        sectors = {dicke::Sector::plus, dicke::Sector::minus};
    else if (opt.sector == "plus")
        sectors = {dicke::Sector::plus};
    else if (opt.sector == "minus")
        sectors = {dicke::Sector::minus};
    else
        throw std::invalid_argument("spectrum: --sector must be both, plus or minus");

    std::vector<dicke::eig::Spectrum> spectra(sectors.size());
    dicke::par::parallel_index(sectors.size(), common.threads, [&](std::size_t k) {
        if (opt.with_vectors) {
            auto solve = [&] {
                auto block = dicke::hilbert::build_hamiltonian(p, sectors[k]);
                return dicke::eig::spectral_decomposition(block.matrix, sectors[k], p.fingerprint());
            };
            spectra[k] = cache_ptr ? cache_ptr->get_or_compute(p, sectors[k],
                                                               dicke::cache::solver_tag_full, solve)
                                   : solve();
        } else {
            auto solve = [&] {
                auto block = dicke::hilbert::build_hamiltonian_banded(p, sectors[k]);
                dicke::eig::Spectrum s;
                s.sector = sectors[k];
                s.params_fingerprint = p.fingerprint();
                s.eigenvalues = dicke::eig::eigenvalues_banded(block.ab, block.kd, s.params_fingerprint);
                return s;
            };
            spectra[k] = cache_ptr ? cache_ptr->get_or_compute(
                                         p, sectors[k], dicke::cache::solver_tag_values_banded, solve)
                                   : solve();
        }
    });

    auto csv = out.open(csv_path);
    dicke::io::csv_row(csv, "sector", "index", "energy", "energy_over_J");
    for (std::size_t k = 0; k < sectors.size(); ++k)
        for (Eigen::Index i = 0; i < spectra[k].size(); ++i)
            dicke::io::csv_row(csv, dicke::sector_name(sectors[k]), static_cast<int>(i),
                               spectra[k].eigenvalues[i], spectra[k].eigenvalues[i] / p.j());

    json cfg = common_config_json(common);
    cfg["spectrum"] = {{"lambda", opt.lambda}, {"sector", opt.sector}, {"with_vectors", opt.with_vectors}};
    json results;
    results["n_max"] = p.n_max;
    results["dimensions"] = json::array();
    for (const auto& s : spectra) results["dimensions"].push_back(s.size());
    out.finish(std::move(cfg), std::move(results));
}

void run_phase_diagram(const CommonOptions& common, const PhaseDiagramOptions& opt) {
    OutputSet out(common, "phase-diagram");
    const auto map_path = out.reserve("map.csv");
    const auto line_path = out.reserve("line.csv");
    const auto grid =
        lambda_grid_from(opt.lambda_min, opt.lambda_max, opt.lambda_step, opt.lambdas);
    if (out.dry_run()) return;

    auto tmpl = make_params(common, grid.front(), std::max(common.n_max, 0));
    auto cache = open_cache(common);

    dicke::phase::ScanOptions scan_opt;
    scan_opt.window_top_over_j = opt.window_top;
    scan_opt.verify_cutoff = !opt.no_verify_cutoff;
    if (common.n_max >= 0) scan_opt.n_max_override = common.n_max;
    scan_opt.threads = common.threads;
    scan_opt.cache = cache ? &*cache : nullptr;

    const auto scan = dicke::phase::scan_phase_diagram(tmpl, grid, common.k_err, scan_opt);
    {
        auto csv = out.open(map_path);
        dicke::phase::write_map_csv(csv, scan);
    }
    {
        auto csv = out.open(line_path);
        dicke::phase::write_line_csv(csv, scan.line);
    }
    for (const auto& row : scan.rows)
        if (!row.misaligned.empty())
            std::cerr << "dicke: pairing misalignment at lambda=" << row.lambda << " ("
                      << row.misaligned.size() << " pair indices)\n";

    json cfg = common_config_json(common);
    cfg["phase-diagram"] = {{"lambda_min", opt.lambda_min},
                            {"lambda_max", opt.lambda_max},
                            {"lambda_step", opt.lambda_step},
                            {"lambdas", opt.lambdas},
                            {"window_top", opt.window_top},
                            {"no_verify_cutoff", opt.no_verify_cutoff}};
    json results;
    results["line_points"] = scan.line.points.size();
    json cutoffs = json::object();
    for (const auto& row : scan.rows)
        cutoffs[dicke::io::format_double(row.lambda)] = row.n_max;
    results["n_max_by_lambda"] = std::move(cutoffs);
    out.finish(std::move(cfg), std::move(results));
}

void run_scaling(const CommonOptions& common, const ScalingOptions& opt) {
    OutputSet out(common, "scaling");
    const auto scaling_path = out.reserve("scaling.csv");
    std::vector<fs::path> line_paths;
    for (int n : opt.n_list) line_paths.push_back(out.reserve("line_N" + std::to_string(n) + ".csv"));
    const auto grid = lambda_grid_from(opt.lambda_min, opt.lambda_max, opt.lambda_step, {});
    if (out.dry_run()) return;

    auto cache = open_cache(common);
    std::vector<dicke::phase::ScalingFit> fits;
    std::vector<std::pair<double, double>> a_series, b_series;

    for (std::size_t k = 0; k < opt.n_list.size(); ++k) {
        CommonOptions c = common;
        c.n_atoms = opt.n_list[k];
        auto tmpl = make_params(c, grid.front(), std::max(common.n_max, 0));

        dicke::phase::ScanOptions scan_opt;
        scan_opt.window_top_over_j = opt.window_top;
        scan_opt.verify_cutoff = !opt.no_verify_cutoff;
        if (common.n_max >= 0) scan_opt.n_max_override = common.n_max;
        scan_opt.threads = common.threads;
        scan_opt.cache = cache ? &*cache : nullptr;

        const auto scan = dicke::phase::scan_phase_diagram(tmpl, grid, common.k_err, scan_opt);
        const auto fit = dicke::phase::fit_critical_line(scan.line, tmpl.lambda_critical());
        fits.push_back(fit);
        a_series.emplace_back(opt.n_list[k], fit.intercept);
        b_series.emplace_back(opt.n_list[k], fit.slope);
        auto csv = out.open(line_paths[k]);
        dicke::phase::write_line_csv(csv, scan.line);
    }

    {
        auto csv = out.open(scaling_path);
        dicke::phase::write_scaling_csv(csv, fits);
    }

    json powerlaw;
    auto fit_to_json = [&](const std::vector<std::pair<double, double>>& series,
                           std::optional<double> pinned) {
        try {
            const auto f = opt.free_asymptote ? dicke::phase::fit_power_law(series)
                                              : dicke::phase::fit_power_law(series, pinned);
            return json{{"converged", true},
                        {"asymptote", f.asymptote},
                        {"amplitude", f.amplitude},
                        {"exponent", f.exponent},
                        {"degenerate", f.degenerate}};
        } catch (const dicke::ConvergenceError& e) {
            return json{{"converged", false}, {"error", e.what()}};
        }
    };
    powerlaw["A_N"] = fit_to_json(a_series, -1.0);
    powerlaw["B_N"] = fit_to_json(b_series, 0.0);

    json cfg = common_config_json(common);
    cfg["scaling"] = {{"n_list", opt.n_list},       {"lambda_min", opt.lambda_min},
                      {"lambda_max", opt.lambda_max}, {"lambda_step", opt.lambda_step},
                      {"window_top", opt.window_top}, {"no_verify_cutoff", opt.no_verify_cutoff},
                      {"free_asymptote", opt.free_asymptote}};
    json results;
    results["power_law"] = std::move(powerlaw);
    out.finish(std::move(cfg), std::move(results));
}

void run_surface(const CommonOptions& common, const SurfaceOptions& opt) {
    OutputSet out(common, "meanfield-surface");
    const auto surface_path = out.reserve("surface.csv");
    const auto contour_path = out.reserve("critical_contour.csv");
    if (out.dry_run()) return;

    const auto p = make_params(common, opt.lambda, 0);
    const auto grid = dicke::meanfield::surface_grid(opt.lambda, p, {opt.mu_min, opt.mu_max},
                                                     {opt.nu_min, opt.nu_max}, opt.resolution);
    {
        auto csv = out.open(surface_path);
        dicke::meanfield::write_surface_csv(csv, grid);
    }
    {
        const auto isolines =
            dicke::contour::extract_isolines(grid.values_over_j, grid.mu_axis, grid.nu_axis, -1.0);
        auto csv = out.open(contour_path);
        dicke::meanfield::write_contours_csv(csv, isolines, "mu", "nu");
    }

    const auto minima = dicke::meanfield::minimize_surface(opt.lambda, p);
    json cfg = common_config_json(common);
    cfg["meanfield-surface"] = {{"lambda", opt.lambda},   {"mu_min", opt.mu_min},
                                {"mu_max", opt.mu_max},   {"nu_min", opt.nu_min},
                                {"nu_max", opt.nu_max},   {"resolution", opt.resolution}};
    json results;
    results["components_below_critical"] = grid.components_below_critical;
    results["classification"] = grid.classification == dicke::meanfield::LevelSetClass::point_minimum
                                    ? "point-minimum"
                                : grid.classification == dicke::meanfield::LevelSetClass::two_wells
                                    ? "two-wells"
                                    : "other";
    results["minimum"] = {{"mu", minima.branch_plus.point.mu},
                          {"nu", minima.branch_plus.point.nu},
                          {"E_over_J", minima.branch_plus.energy / p.j()},
                          {"degenerate", minima.degenerate}};
    out.finish(std::move(cfg), std::move(results));
}

void run_quench_map(const CommonOptions& common, const QuenchMapOptions& opt) {
    OutputSet out(common, "quench-map");
    const auto map_path = out.reserve("quench_map.csv");
    const auto contour_path = out.reserve("critical_contour.csv");
    if (out.dry_run()) return;

    const auto p = make_params(common, opt.lambda_i_min, 0);
    const auto grid = dicke::meanfield::quench_energy_grid(
        {opt.lambda_i_min, opt.lambda_i_max}, {opt.lambda_f_min, opt.lambda_f_max}, opt.resolution, p);
    {
        auto csv = out.open(map_path);
        dicke::meanfield::write_quench_grid_csv(csv, grid);
    }
    {
        auto csv = out.open(contour_path);
        dicke::meanfield::write_contours_csv(csv, grid.critical_contour, "lambda_i", "lambda_f");
    }

    json cfg = common_config_json(common);
    cfg["quench-map"] = {{"lambda_i_min", opt.lambda_i_min}, {"lambda_i_max", opt.lambda_i_max},
                         {"lambda_f_min", opt.lambda_f_min}, {"lambda_f_max", opt.lambda_f_max},
                         {"resolution", opt.resolution}};
    json results;
    results["contour_polylines"] = grid.critical_contour.size();
    out.finish(std::move(cfg), std::move(results));
}

void run_quench(const CommonOptions& common, const QuenchOptions& opt) {
    OutputSet out(common, "quench");
    const auto series_path = out.reserve("series.csv");
    const auto populations_path = out.reserve("populations.csv");
    if (out.dry_run()) return;

    const auto base = make_params(common, opt.lambda_i, 0);
    auto cache = open_cache(common);

    dicke::dynamics::QuenchSpec spec;
    spec.lambda_i = opt.lambda_i;
    spec.lambda_f = opt.lambda_f;
    spec.branch = opt.branch;
    spec.observable = opt.observable == "jx" ? "Jx" : opt.observable;
    spec.t_max = opt.t_max;
    spec.samples = opt.samples;
    spec.window_fraction = opt.window_fraction;
    spec.threshold_over_j = opt.threshold;
    spec.drop_tolerance = opt.drop_tol;
    if (common.n_max >= 0) spec.n_max_override = common.n_max;
    spec.threads = common.threads;

    const auto result = dicke::dynamics::run_quench(spec, base, cache ? &*cache : nullptr);
    const double j = base.j();
    {
        auto csv = out.open(series_path);
        dicke::dynamics::write_series_csv(csv, result.series, j);
    }
    {
        auto csv = out.open(populations_path);
        dicke::dynamics::write_populations_csv(csv, result, j);
    }

    json cfg = common_config_json(common);
    cfg["quench"] = {{"lambda_i", opt.lambda_i},
                     {"lambda_f", opt.lambda_f},
                     {"branch", opt.branch},
                     {"observable", opt.observable},
                     {"t_max", opt.t_max},
                     {"samples", opt.samples},
                     {"window_fraction", opt.window_fraction},
                     {"threshold", opt.threshold},
                     {"drop_tol", opt.drop_tol}};
    json results;
    results["lambda_i"] = opt.lambda_i;
    results["lambda_f"] = opt.lambda_f;
    results["branch"] = opt.branch;
    results["N"] = common.n_atoms;
    results["n_max"] = result.n_max;
    results["E_over_J_formula"] = result.e_formula_over_j;
    results["E_over_J_numeric"] = result.e_numeric_over_j;
    results["steady_mean"] = result.steady.mean;
    results["steady_rms"] = result.steady.rms;
    results["classification"] = result.series.classification;
    results["diagonal_ensemble"] = result.diagonal.value;
    results["long_time_prediction"] = result.long_time_prediction;
    out.finish(std::move(cfg), std::move(results));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Excited-state phase diagram and quench dynamics of the single-mode "
                 "spin-boson (Dicke) model"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config file (flags override file values)");
    app.require_subcommand(1);

    CommonOptions common;
    app.add_option("--omega", common.omega, "Cavity mode frequency")->capture_default_str();
    app.add_option("--omega0", common.omega0, "Atomic transition frequency")->capture_default_str();
    app.add_option("--n-atoms", common.n_atoms, "Number of atoms N")->required();
    app.add_option("--n-max", common.n_max,
                   "Photon cutoff; -1 selects it automatically per run")
        ->capture_default_str();
    app.add_option("--dim-limit", common.dim_limit, "Per-block matrix dimension cap")
        ->capture_default_str();
    app.add_option("--k-err", common.k_err, "Doublet-gap threshold for the critical energy")
        ->capture_default_str();
    app.add_option("--output-dir", common.output_dir, "Directory for CSV and sidecar output")
        ->capture_default_str();
    app.add_option("--cache-dir", common.cache_dir, "Spectrum cache directory")
        ->envname("DICKE_CACHE_DIR")
        ->capture_default_str();
    app.add_flag("--no-cache", common.no_cache, "Disable the spectrum cache");
    app.add_option("--threads", common.threads, "Worker threads (results are independent of this)")
        ->capture_default_str();
    app.add_flag("--force", common.force, "Overwrite existing output files");
    app.add_flag("--dry-run", common.dry_run, "Validate the configuration and exit");

    SpectrumOptions spectrum_opt;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "Eigenvalues of one or both parity sectors");
    spectrum_cmd->configurable();
    spectrum_cmd->add_option("--lambda", spectrum_opt.lambda, "Coupling strength")
        ->required()
        ->check(CLI::NonNegativeNumber);
    spectrum_cmd->add_option("--sector", spectrum_opt.sector, "both | plus | minus")
        ->capture_default_str();
    spectrum_cmd->add_flag("--with-vectors", spectrum_opt.with_vectors,
                           "Dense solve with eigenvectors (cached for reuse)");

    PhaseDiagramOptions phase_opt;
    auto* phase_cmd =
        app.add_subcommand("phase-diagram", "Doublet-gap map and critical line over a coupling grid");
    phase_cmd->configurable();
    phase_cmd->add_option("--lambda-min", phase_opt.lambda_min)->capture_default_str();
    phase_cmd->add_option("--lambda-max", phase_opt.lambda_max)->capture_default_str();
    phase_cmd->add_option("--lambda-step", phase_opt.lambda_step)->capture_default_str();
    phase_cmd->add_option("--lambdas", phase_opt.lambdas, "Explicit grid (overrides the range)");
    phase_cmd->add_option("--window-top", phase_opt.window_top, "Map extent, pair energy over J")
        ->capture_default_str();
    phase_cmd->add_flag("--no-verify-cutoff", phase_opt.no_verify_cutoff,
                        "Skip the cutoff stability search at the largest lambda");

    ScalingOptions scaling_opt;
    auto* scaling_cmd =
        app.add_subcommand("scaling", "Critical-line fits and their finite-size power laws");
    scaling_cmd->configurable();
    scaling_cmd->add_option("--n-list", scaling_opt.n_list, "Atom numbers")->capture_default_str();
    scaling_cmd->add_option("--lambda-min", scaling_opt.lambda_min)->capture_default_str();
    scaling_cmd->add_option("--lambda-max", scaling_opt.lambda_max)->capture_default_str();
    scaling_cmd->add_option("--lambda-step", scaling_opt.lambda_step)->capture_default_str();
    scaling_cmd->add_option("--window-top", scaling_opt.window_top)->capture_default_str();
    scaling_cmd->add_flag("--no-verify-cutoff", scaling_opt.no_verify_cutoff);
    scaling_cmd->add_flag("--free-asymptote", scaling_opt.free_asymptote,
                          "Fit the power-law asymptotes instead of pinning them to -1 and 0");

    SurfaceOptions surface_opt;
    auto* surface_cmd =
        app.add_subcommand("meanfield-surface", "Variational energy surface on a coherent-state grid");
    surface_cmd->configurable();
    surface_cmd->add_option("--lambda", surface_opt.lambda)->required()->check(CLI::NonNegativeNumber);
    surface_cmd->add_option("--mu-min", surface_opt.mu_min)->capture_default_str();
    surface_cmd->add_option("--mu-max", surface_opt.mu_max)->capture_default_str();
    surface_cmd->add_option("--nu-min", surface_opt.nu_min)->capture_default_str();
    surface_cmd->add_option("--nu-max", surface_opt.nu_max)->capture_default_str();
    surface_cmd->add_option("--resolution", surface_opt.resolution)->capture_default_str();

    QuenchMapOptions quench_map_opt;
    auto* quench_map_cmd =
        app.add_subcommand("quench-map", "Quench energy over the (lambda_i, lambda_f) plane");
    quench_map_cmd->configurable();
    quench_map_cmd->add_option("--lambda-i-min", quench_map_opt.lambda_i_min)->capture_default_str();
    quench_map_cmd->add_option("--lambda-i-max", quench_map_opt.lambda_i_max)->capture_default_str();
    quench_map_cmd->add_option("--lambda-f-min", quench_map_opt.lambda_f_min)->capture_default_str();
    quench_map_cmd->add_option("--lambda-f-max", quench_map_opt.lambda_f_max)->capture_default_str();
    quench_map_cmd->add_option("--resolution", quench_map_opt.resolution)->capture_default_str();

    QuenchOptions quench_opt;
    auto* quench_cmd = app.add_subcommand(
        "quench", "Post-quench expectation-value dynamics and steady-state classification");
    quench_cmd->configurable();
    quench_cmd->add_option("--lambda-i", quench_opt.lambda_i, "Pre-quench coupling")->required();
    quench_cmd->add_option("--lambda-f", quench_opt.lambda_f, "Post-quench coupling")
        ->required()
        ->check(CLI::NonNegativeNumber);
    quench_cmd->add_option("--branch", quench_opt.branch, "+1 or -1: which broken minimum")
        ->capture_default_str();
    quench_cmd->add_option("--observable", quench_opt.observable, "Jx | q")->capture_default_str();
    quench_cmd->add_option("--t-max", quench_opt.t_max)->capture_default_str();
    quench_cmd->add_option("--samples", quench_opt.samples)->capture_default_str();
    quench_cmd->add_option("--window-fraction", quench_opt.window_fraction)->capture_default_str();
    quench_cmd->add_option("--threshold", quench_opt.threshold, "Steady-state threshold over J")
        ->capture_default_str();
    quench_cmd->add_option("--drop-tol", quench_opt.drop_tol)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (spectrum_cmd->parsed()) run_spectrum(common, spectrum_opt);
        if (phase_cmd->parsed()) run_phase_diagram(common, phase_opt);
        if (scaling_cmd->parsed()) run_scaling(common, scaling_opt);
        if (surface_cmd->parsed()) run_surface(common, surface_opt);
        if (quench_map_cmd->parsed()) run_quench_map(common, quench_map_opt);
        if (quench_cmd->parsed()) run_quench(common, quench_opt);
    } catch (const dicke::ConvergenceError& e) {
        std::cerr << "dicke: convergence failure: " << e.what() << '\n';
        return 3;
    } catch (const dicke::IoError& e) {
        std::cerr << "dicke: i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "dicke: i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "dicke: invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "dicke: invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "dicke: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
