// hexquant: quantization energies of deformed hexagonal lattices, their
// continuum limit, and the associated gradient flows. Subcommands: validate,
// sweep-eps, sweep-L, flow, render. Parameter precedence: command-line flags
// override the JSON config file, which overrides built-in defaults.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hexquant/continuum_energy.hpp"
#include "hexquant/deformation.hpp"
#include "hexquant/discrete_energy.hpp"
#include "hexquant/flows.hpp"
#include "hexquant/io.hpp"
#include "hexquant/serialization.hpp"
#include "hexquant/validation.hpp"
#include "hexquant/voronoi.hpp"

namespace hq = hexquant;
using nlohmann::json;

namespace {

json load_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream in(argv[i + 1]);
            if (!in) throw std::runtime_error(std::string("cannot open config ") + argv[i + 1]);
            json j;
            in >> j;
            return j;
        }
    }
    return json::object();
}

template <typename T>
T cfg(const json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

/// The fixed trigonometric deformation used by the sweeps when no field file
/// is given: two-mode displacement rescaled so its W^{1,inf} norm equals eta.
hq::DeformationField builtin_trig_field(double eta) {
    std::vector<hq::FourierMode> modes = {
        {1, 0, {0.0, 0.0}, {1.0, 0.0}},
        {0, 1, {0.0, 0.0}, {0.0, -0.8}},
        {1, 1, {0.5, 0.0}, {0.0, 0.0}},
        {1, -1, {0.0, 0.0}, {0.0, 0.6}},
    };
    hq::DeformationField raw = hq::recenter(hq::DeformationField::fourier(modes, eta));
    const double scale = eta / hq::w1inf_norm(raw, 96);
    for (hq::FourierMode& md : modes) {
        md.cos_coef *= scale;
        md.sin_coef *= scale;
    }
    return hq::DeformationField::fourier(std::move(modes), eta);
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

void write_manifest(const std::string& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_validate(double tol_scale, std::uint64_t seed, bool inject_p_flip, bool as_json) {
    hq::validation::Options opts;
    opts.tol_scale = tol_scale;
    opts.seed = seed;
    opts.mutate_p_sign = inject_p_flip;
    const auto battery = hq::validation::run_battery(opts);
    if (as_json) {
        json j;
        j["all_pass"] = battery.all_pass;
        j["tolerance_scale"] = tol_scale;
        json checks = json::array();
        for (const auto& r : battery.results)
            checks.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        j["checks"] = std::move(checks);
        std::cout << j.dump(2) << "\n";
    } else {
        for (const auto& r : battery.results) {
            std::cout << (r.pass ? "PASS " : "FAIL ") << r.name;
            if (!r.detail.empty()) std::cout << " | " << r.detail;
            std::cout << "\n";
        }
        std::cout << (battery.all_pass ? "ALL CHECKS PASSED" : "FAILURES PRESENT") << "\n";
    }
    return battery.all_pass ? 0 : 1;
}

int cmd_sweep_eps(const hq::DeformationField& field, const std::vector<int>& n_list,
                  const std::string& out_path) {
    const double functional = hq::energy_functional(field, 96);
    hq::CsvWriter csv(out_path);
    csv.row({"epsilon", "quantization_energy_lattice_units4", "q_over_eps2",
             "functional_lattice_units4", "ratio_pi_normalized", "status"});
    for (int n : n_list) {
        const hq::HexLattice lat(n);
        std::vector<std::string> row;
        row.push_back(hq::format_double(lat.epsilon));
        try {
            const double q = hq::quantization_energy(field, lat);
            const double q_over = q / (lat.epsilon * lat.epsilon);
            // ratio -> 1: the per-period integral behaves like eps^2 F(X)/|Pi|
            // in lattice units, where the node density carries the 1/|Pi|
            // that a unit-volume normalization would absorb
            const double ratio = q_over * hq::area_pi() / functional;
            row.push_back(hq::format_double(q));
            row.push_back(hq::format_double(q_over));
            row.push_back(hq::format_double(functional));
            row.push_back(hq::format_double(ratio));
            row.push_back("ok");
        } catch (const hq::mode_violation_error& e) {
            row.insert(row.end(), {"", "", hq::format_double(functional), ""});
            row.push_back(std::string("regime_violation: ") + e.what());
        }
        csv.row(row);
        std::cout << "n=" << n << " done\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_sweep_L(const hq::DeformationField& field, int n, const std::vector<double>& l_list,
                std::size_t samples, std::uint64_t seed, int threads,
                const std::string& out_path) {
    const hq::HexLattice lat(n);
    const auto ref = hq::ball_average_reference(field, lat);
    hq::CsvWriter csv(out_path);
    csv.row({"L_lattice_units", "ball_average", "std_error", "per_period_integral",
             "per_unit_area_reference", "relative_gap", "status"});
    for (double L : l_list) {
        std::vector<std::string> row;
        row.push_back(hq::format_double(L));
        try {
            const auto ba = hq::ball_average(field, lat, L, samples, seed, 8, threads);
            const double gap = std::abs(ba.value - ref.per_unit_area) / ref.per_unit_area;
            row.push_back(hq::format_double(ba.value));
            row.push_back(hq::format_double(ba.std_error));
            row.push_back(hq::format_double(ref.per_period_integral));
            row.push_back(hq::format_double(ref.per_unit_area));
            row.push_back(hq::format_double(gap));
            row.push_back(ba.std_error > gap * ref.per_unit_area
                              ? "warning: statistical error above gap"
                              : "ok");
        } catch (const hq::geometry_error& e) {
            row.insert(row.end(), {"", "", "", "", ""});
            row.push_back(std::string("error: ") + e.what());
        }
        csv.row(row);
        std::cout << "L=" << L << " done\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_flow_particle(int n, double jitter_over_eps, double t_final, std::size_t max_steps,
                      std::uint64_t seed, const std::vector<int>& snapshots,
                      const std::string& out_dir, const std::string& resume_path) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    hq::ParticleState state;
    double dt_init = 0.0;
    if (!resume_path.empty()) {
        std::ifstream in(resume_path);
        json man;
        in >> man;
        n = man.at("n").get<int>(); // the checkpoint fixes the lattice
        state.lattice = hq::HexLattice(n);
        state.time = man.at("state_time").get<double>();
        dt_init = man.at("state_dt").get<double>();
        for (const auto& pj : man.at("state_points"))
            state.points.push_back({pj.at(0).get<double>(), pj.at(1).get<double>()});
    } else {
        state = hq::jittered_lattice(hq::HexLattice(n), jitter_over_eps / n, seed);
    }
    const hq::HexLattice lat(n);

    hq::ParticleFlowOptions opts;
    opts.t_final = t_final;
    opts.max_steps = max_steps;
    if (dt_init > 0.0) opts.dt_init = dt_init;

    // run step by step so snapshots land on exact accepted-step indices
    hq::FlowTrace trace;
    double dt = opts.dt_init > 0.0
                    ? opts.dt_init
                    : 0.25 / (std::sqrt(3.0) * lat.epsilon * lat.epsilon);
    auto snapshot = [&](int step) {
        if (std::find(snapshots.begin(), snapshots.end(), step) == snapshots.end()) return;
        const auto dia = hq::voronoi_periodic(state.points, state.lattice, hq::VoronoiMode::hexagon);
        hq::render_diagram_svg(out_dir + "/snapshot_" + std::to_string(step) + ".svg", dia);
    };
    auto record = [&](double dt_used) {
        const auto dev = hq::lattice_deviation(state);
        trace.records.push_back({state.time, hq::particle_rhs(state).energy, dev.rms_deviation,
                                 dev.max_deviation, dt_used, true});
    };
    record(0.0);
    snapshot(0);
    bool plateau = false;
    for (std::size_t step = 0; step < opts.max_steps && state.time < opts.t_final; ++step) {
        const double t_before = state.time;
        state = hq::particle_step(state, dt);
        if (state.time == t_before) {
            plateau = true;
            break;
        }
        record(dt);
        snapshot(int(step) + 1);
        dt *= 1.2;
        if ((step + 1) % 50 == 0) {
            const auto dia =
                hq::voronoi_periodic(state.points, state.lattice, hq::VoronoiMode::general);
            if (std::abs(dia.total_area() - hq::area_pi()) > 1e-9)
                throw hq::mode_violation_error("particle flow: general-mode area check failed");
        }
    }
    trace.converged_plateau = plateau;
    hq::write_trace_csv(out_dir + "/trace.csv", trace);

    json man;
    man["kind"] = "particle";
    man["n"] = n;
    man["seed"] = seed;
    man["jitter_over_eps"] = jitter_over_eps;
    man["t_final"] = t_final;
    man["max_steps"] = max_steps;
    man["converged_plateau"] = plateau;
    man["state_time"] = state.time;
    man["state_dt"] = dt;
    json pts = json::array();
    for (const hq::Vec2& p : state.points) pts.push_back({p.x1, p.x2});
    man["state_points"] = std::move(pts);
    const auto dev = hq::lattice_deviation(state);
    man["final_max_deviation_over_eps"] = dev.max_deviation / lat.epsilon;
    man["final_energy"] = hq::particle_rhs(state).energy;
    write_manifest(out_dir + "/manifest.json", man);
    std::cout << "final max deviation / eps: " << dev.max_deviation / lat.epsilon << "\n"
              << "wrote " << out_dir << "/{trace.csv,manifest.json,snapshots}\n";
    return 0;
}

int cmd_flow_pde(int m, double eta, double t_final, std::size_t max_steps, std::uint64_t seed,
                 const std::string& variant_name, const std::string& out_dir,
                 const std::string& field_path, const std::string& resume_path) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    hq::PdeVariant variant = hq::PdeVariant::F;
    if (variant_name == "F0") variant = hq::PdeVariant::F0;
    else if (variant_name == "G") variant = hq::PdeVariant::G;
    else if (variant_name != "F") throw std::runtime_error("unknown variant " + variant_name);

    hq::PdeState state;
    hq::PdeFlowOptions opts;
    if (!resume_path.empty()) {
        std::ifstream in(resume_path);
        json man;
        in >> man;
        state.m = man.at("m").get<int>();
        state.time = man.at("state_time").get<double>();
        opts.dt_init = man.at("state_dt").get<double>();
        for (const auto& vj : man.at("state_values"))
            state.y.push_back({vj.at(0).get<double>(), vj.at(1).get<double>()});
    } else if (!field_path.empty()) {
        state = hq::PdeState::from_field(hq::load_field(field_path), m);
    } else {
        state = hq::PdeState::from_field(hq::random_band_limited_field(eta, seed), m);
    }
    opts.t_final = t_final;
    opts.max_steps = max_steps;
    opts.coercivity = hq::estimate_coercivity();

    // step manually to keep the dt needed for exact-resume manifests
    const hq::ConvexifiedG g_density{opts.coercivity};
    hq::FlowTrace trace;
    double dt = opts.dt_init > 0.0 ? opts.dt_init
                                   : 1.0 / (state.m * state.m * 8.0 * opts.coercivity.Lambda);
    trace.records.push_back(
        {state.time, hq::pde_energy(state, variant, g_density), state.l2(), state.linf(), 0.0, true});
    for (std::size_t step = 0; step < opts.max_steps && state.time < opts.t_final; ++step) {
        const double t_before = state.time;
        state = hq::pde_step(state, dt, variant, g_density);
        if (state.time == t_before) {
            trace.converged_plateau = true;
            break;
        }
        trace.records.push_back({state.time, hq::pde_energy(state, variant, g_density), state.l2(),
                                 state.linf(), dt, true});
        dt *= 1.25;
    }
    hq::write_trace_csv(out_dir + "/trace.csv", trace);

    json man;
    man["kind"] = "pde";
    man["m"] = state.m;
    man["eta"] = eta;
    man["seed"] = seed;
    man["variant"] = variant_name;
    man["t_final"] = t_final;
    man["max_steps"] = max_steps;
    man["converged_plateau"] = trace.converged_plateau;
    man["state_time"] = state.time;
    man["state_dt"] = dt;
    json vals = json::array();
    for (const hq::Vec2& v : state.y) vals.push_back({v.x1, v.x2});
    man["state_values"] = std::move(vals);
    man["final_l2"] = state.l2();
    man["final_linf"] = state.linf();
    try {
        const auto rep = hq::decay_report(trace, opts.coercivity);
        man["decay_fitted_rate"] = rep.fitted_rate;
        man["decay_r_squared"] = rep.r_squared;
        man["decay_bound_as_printed"] = rep.bound_as_printed;
        man["decay_bound_corrected"] = rep.bound_corrected;
        man["decay_pass"] = rep.pass;
        man["linearized_smallest_eigenvalue"] = hq::linearized_smallest_eigenvalue(state.m);
        std::cout << rep.summary() << "\n";
    } catch (const std::exception& e) {
        man["decay_report_error"] = e.what();
    }
    write_manifest(out_dir + "/manifest.json", man);
    std::cout << "final linf " << state.linf() << ", wrote " << out_dir
              << "/{trace.csv,manifest.json}\n";
    return 0;
}

int cmd_render(const std::string& field_path, int n, const std::string& mode_name,
               const std::string& out_svg, const std::string& out_csv) {
    const hq::DeformationField field =
        field_path.empty() ? hq::DeformationField::identity() : hq::load_field(field_path);
    const hq::HexLattice lat(n);
    const hq::VoronoiMode mode =
        mode_name == "general" ? hq::VoronoiMode::general : hq::VoronoiMode::hexagon;
    const auto dia = hq::voronoi_periodic(hq::sample_points(field, lat), lat, mode);
    if (!out_csv.empty()) hq::write_cells_csv(out_csv, dia);
    if (!out_svg.empty()) hq::render_diagram_svg(out_svg, dia);
    std::cout << "cells: " << dia.cells.size() << ", total area " << dia.total_area() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        const json config = load_config(argc, argv);

        CLI::App app{"Quantization energies of deformed hexagonal lattices and their gradient flows"};
        app.require_subcommand(1);
        app.fallthrough(); // app-level flags may follow the subcommand name
        std::string config_path;
        app.add_option("--config", config_path, "JSON config file (flags override its values)");

        // validate
        auto* validate = app.add_subcommand("validate", "run the full property battery");
        double tol_scale = cfg(config, "tolerance_scale", 1.0);
        std::uint64_t v_seed = cfg(config, "seed", std::uint64_t(20260811));
        bool inject_p = false, as_json = false;
        validate->add_option("--tolerance-scale", tol_scale, "multiply every tolerance");
        validate->add_option("--seed", v_seed, "random seed");
        validate->add_flag("--inject-p-sign-flip", inject_p,
                           "test hook: corrupt one P term to show the battery catches it");
        validate->add_flag("--json", as_json, "machine-readable JSON report");

        // sweep-eps
        auto* sweep_eps = app.add_subcommand("sweep-eps", "Q vs eps^2 F convergence sweep");
        std::string se_nlist = cfg(config, "n_list", std::string("4,8,16,32"));
        double se_eta = cfg(config, "eta", 0.02);
        std::string se_out = cfg(config, "out", std::string("sweep_eps.csv"));
        std::string se_field = cfg(config, "field", std::string());
        sweep_eps->add_option("--n-list", se_nlist, "comma-separated lattice sizes");
        sweep_eps->add_option("--eta", se_eta, "W1inf size of the built-in deformation");
        sweep_eps->add_option("--out", se_out, "output CSV");
        sweep_eps->add_option("--field", se_field, "field descriptor JSON (overrides --eta)");

        // sweep-L
        auto* sweep_l = app.add_subcommand("sweep-L", "ball average vs per-period integral");
        std::string sl_llist = cfg(config, "L_list", std::string("5,10,20,40"));
        int sl_n = cfg(config, "n", 8);
        double sl_eta = cfg(config, "eta", 0.04);
        std::size_t sl_samples = cfg(config, "samples", std::size_t(1000000));
        std::uint64_t sl_seed = cfg(config, "seed", std::uint64_t(2026));
        int sl_threads = cfg(config, "threads", 1);
        std::string sl_out = cfg(config, "out", std::string("sweep_L.csv"));
        std::string sl_field = cfg(config, "field", std::string());
        sweep_l->add_option("--L-list", sl_llist, "comma-separated radii (lattice units)");
        sweep_l->add_option("--n", sl_n, "lattice size");
        sweep_l->add_option("--eta", sl_eta, "W1inf size of the built-in deformation");
        sweep_l->add_option("--samples", sl_samples, "Monte-Carlo samples per radius");
        sweep_l->add_option("--seed", sl_seed, "random seed");
        sweep_l->add_option("--threads", sl_threads, "worker threads for the sampling");
        sweep_l->add_option("--out", sl_out, "output CSV");
        sweep_l->add_option("--field", sl_field, "field descriptor JSON (overrides --eta)");

        // flow
        auto* flow = app.add_subcommand("flow", "run the particle or PDE gradient flow");
        std::string f_kind = cfg(config, "kind", std::string("particle"));
        int f_n = cfg(config, "n", 16);
        int f_m = cfg(config, "m", 32);
        double f_eta = cfg(config, "eta", 0.02);
        double f_jitter = cfg(config, "jitter_over_eps", 0.1);
        double f_T = cfg(config, "T", 10.0);
        std::size_t f_steps = cfg(config, "max_steps", std::size_t(100000));
        std::uint64_t f_seed = cfg(config, "seed", std::uint64_t(7));
        std::string f_variant = cfg(config, "variant", std::string("F"));
        std::string f_out = cfg(config, "out_dir", std::string("flow_out"));
        std::string f_snapshots = cfg(config, "snapshots", std::string("0,19,157"));
        std::string f_field = cfg(config, "field", std::string());
        std::string f_resume = cfg(config, "resume", std::string());
        flow->add_option("--kind", f_kind, "particle | pde");
        flow->add_option("--n", f_n, "lattice size (particle)");
        flow->add_option("--m", f_m, "grid size (pde)");
        flow->add_option("--eta", f_eta, "initial data W1inf size (pde)");
        flow->add_option("--jitter", f_jitter, "initial jitter radius / eps (particle)");
        flow->add_option("--T", f_T, "final time");
        flow->add_option("--max-steps", f_steps, "step cap");
        flow->add_option("--seed", f_seed, "random seed");
        flow->add_option("--variant", f_variant, "pde density: F | F0 | G");
        flow->add_option("--out-dir", f_out, "output directory");
        flow->add_option("--snapshots", f_snapshots, "accepted-step indices for SVG snapshots");
        flow->add_option("--field", f_field, "initial field descriptor JSON (pde)");
        flow->add_option("--resume", f_resume, "manifest.json to continue from");

        // render
        auto* render = app.add_subcommand("render", "tessellation SVG + per-cell CSV");
        std::string r_field = cfg(config, "field", std::string());
        int r_n = cfg(config, "n", 8);
        std::string r_mode = cfg(config, "mode", std::string("hexagon"));
        std::string r_svg = cfg(config, "out_svg", std::string("cells.svg"));
        std::string r_csv = cfg(config, "out_csv", std::string("cells.csv"));
        render->add_option("--field", r_field, "field descriptor JSON (default: identity)");
        render->add_option("--n", r_n, "lattice size");
        render->add_option("--mode", r_mode, "hexagon | general");
        render->add_option("--out-svg", r_svg, "SVG path ('' to skip)");
        render->add_option("--out-csv", r_csv, "CSV path ('' to skip)");

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            return app.exit(e);
        }

        if (validate->parsed()) return cmd_validate(tol_scale, v_seed, inject_p, as_json);
        if (sweep_eps->parsed()) {
            const hq::DeformationField field =
                se_field.empty() ? builtin_trig_field(se_eta) : hq::load_field(se_field);
            return cmd_sweep_eps(field, parse_int_list(se_nlist), se_out);
        }
        if (sweep_l->parsed()) {
            const hq::DeformationField field =
                sl_field.empty() ? builtin_trig_field(sl_eta) : hq::load_field(sl_field);
            return cmd_sweep_L(field, sl_n, parse_double_list(sl_llist), sl_samples, sl_seed,
                               sl_threads, sl_out);
        }
        if (flow->parsed()) {
            if (f_kind == "particle")
                return cmd_flow_particle(f_n, f_jitter, f_T, f_steps, f_seed,
                                         parse_int_list(f_snapshots), f_out, f_resume);
            if (f_kind == "pde")
                return cmd_flow_pde(f_m, f_eta, f_T, f_steps, f_seed, f_variant, f_out, f_field,
                                    f_resume);
            throw std::runtime_error("unknown flow kind " + f_kind);
        }
        if (render->parsed()) return cmd_render(r_field, r_n, r_mode, r_svg, r_csv);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
