#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hexquant/deformation.hpp"
#include "hexquant/discrete_energy.hpp"
#include "hexquant/io.hpp"
#include "hexquant/serialization.hpp"
#include "hexquant/voronoi.hpp"

using namespace hexquant;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("hexquant_test_" + tag);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args, const std::string& log) {
    const std::string cmd = std::string(HEXQUANT_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::string cur;
    std::vector<std::string> row;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == ',') {
            row.push_back(cur);
            cur.clear();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            row.push_back(cur);
            cur.clear();
            rows.push_back(row);
            row.clear();
            ++i;
        } else {
            cur += c;
        }
    }
    return rows;
}

} // namespace

TEST_CASE("csv writer follows RFC 4180") {
    const fs::path dir = temp_dir("csv");
    const std::string path = (dir / "t.csv").string();
    {
        CsvWriter csv(path);
        csv.row({"plain", "with,comma", "with\"quote", "multi\nline"});
        csv.numeric_row({1.5, -0.25});
    }
    const std::string text = slurp(path);
    CHECK(text == "plain,\"with,comma\",\"with\"\"quote\",\"multi\nline\"\r\n1.5,-0.25\r\n");
}

TEST_CASE("format_double round trips") {
    for (double v : {1.0 / 3.0, 5.0 / (24.0 * std::sqrt(3.0)), -1e-17, 12345.678901234567}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("tessellation exports") {
    const fs::path dir = temp_dir("render");
    const HexLattice lat(3);
    const auto dia = voronoi_periodic(sample_points(DeformationField::identity(), lat), lat,
                                      VoronoiMode::hexagon);

    SECTION("per-cell csv carries units in the header") {
        const std::string path = (dir / "cells.csv").string();
        write_cells_csv(path, dia);
        const auto rows = parse_csv(slurp(path));
        REQUIRE(rows.size() == 10); // header + 9 cells
        CHECK(rows[0][3] == "area_lattice_units2");
        CHECK(rows[0][6] == "energy_lattice_units4");
        const double ref = 5.0 / (24.0 * std::sqrt(3.0)) * std::pow(lat.epsilon, 4);
        CHECK(std::stod(rows[1][6]) == Catch::Approx(ref).epsilon(1e-12));
    }
    SECTION("svg output is well formed") {
        const std::string path = (dir / "cells.svg").string();
        render_diagram_svg(path, dia);
        const std::string svg = slurp(path);
        CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") !=
              std::string::npos);
        CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
        std::size_t polys = 0;
        for (std::size_t p = svg.find("<polygon"); p != std::string::npos;
             p = svg.find("<polygon", p + 1))
            ++polys;
        CHECK(polys == 9);
    }
}

TEST_CASE("field descriptors save and load") {
    const fs::path dir = temp_dir("fields");
    const std::string path = (dir / "field.json").string();
    const DeformationField f = random_band_limited_field(0.02, 1);
    save_field(path, f);
    const DeformationField g = load_field(path);
    const Vec2 x{0.123, -0.321};
    CHECK((f.displacement(x) - g.displacement(x)).norm() == 0.0);
}

TEST_CASE("cli: validate battery") {
    const fs::path dir = temp_dir("cli_validate");
    SECTION("fresh checkout passes with exit code 0") {
        const std::string log = (dir / "validate.log").string();
        CHECK(run_cli("validate", log) == 0);
        const std::string text = slurp(log);
        CHECK(text.find("ALL CHECKS PASSED") != std::string::npos);
        CHECK(text.find("FAIL") == std::string::npos);
    }
    SECTION("injected sign flip in P is caught by name") {
        const std::string log = (dir / "mutated.log").string();
        CHECK(run_cli("validate --inject-p-sign-flip", log) == 1);
        const std::string text = slurp(log);
        CHECK(text.find("FAIL P-vs-F-identity") != std::string::npos);
    }
    SECTION("tolerance override is reflected in the json report") {
        const std::string log = (dir / "tol.log").string();
        CHECK(run_cli("validate --json --tolerance-scale 4", log) == 0);
        const std::string text = slurp(log);
        CHECK(text.find("\"tolerance_scale\": 4.0") != std::string::npos);
        CHECK(text.find("\"all_pass\": true") != std::string::npos);
    }
}

TEST_CASE("cli: sweeps") {
    const fs::path dir = temp_dir("cli_sweeps");
    SECTION("sweep-eps ratio approaches one") {
        const std::string out = (dir / "eps.csv").string();
        const std::string log = (dir / "eps.log").string();
        REQUIRE(run_cli("sweep-eps --n-list 4,8 --eta 0.02 --out " + out, log) == 0);
        const auto rows = parse_csv(slurp(out));
        REQUIRE(rows.size() == 3);
        CHECK(rows[0][4] == "ratio_pi_normalized");
        const double r4 = std::stod(rows[1][4]);
        const double r8 = std::stod(rows[2][4]);
        CHECK(std::abs(r4 - 1.0) < 0.01);
        CHECK(std::abs(r8 - 1.0) < std::abs(r4 - 1.0));
    }
    SECTION("sweep-eps logs regime violations per row") {
        const std::string out = (dir / "eps_big.csv").string();
        const std::string log = (dir / "eps_big.log").string();
        REQUIRE(run_cli("sweep-eps --n-list 4 --eta 0.8 --out " + out, log) == 0);
        const auto rows = parse_csv(slurp(out));
        REQUIRE(rows.size() == 2);
        CHECK(rows[1][5].find("regime_violation") != std::string::npos);
    }
    SECTION("sweep-L is deterministic for a fixed seed") {
        const std::string out1 = (dir / "L1.csv").string();
        const std::string out2 = (dir / "L2.csv").string();
        const std::string log = (dir / "L.log").string();
        const std::string args = "sweep-L --n 4 --L-list 5,10 --samples 20000 --seed 99 --out ";
        REQUIRE(run_cli(args + out1, log) == 0);
        REQUIRE(run_cli(args + out2, log) == 0);
        CHECK(slurp(out1) == slurp(out2));
        CHECK_FALSE(slurp(out1).empty());
    }
}

TEST_CASE("cli: flow runs, snapshots and exact resume") {
    const fs::path dir = temp_dir("cli_flow");
    SECTION("particle flow writes trace, snapshots and manifest") {
        const std::string out = (dir / "particle").string();
        const std::string log = (dir / "particle.log").string();
        REQUIRE(run_cli("flow --kind particle --n 4 --jitter 0.1 --T 1e9 --max-steps 12 "
                        "--seed 5 --snapshots 0,3 --out-dir " + out, log) == 0);
        CHECK(fs::exists(out + "/trace.csv"));
        CHECK(fs::exists(out + "/manifest.json"));
        CHECK(fs::exists(out + "/snapshot_0.svg"));
        CHECK(fs::exists(out + "/snapshot_3.svg"));
        const auto rows = parse_csv(slurp(out + "/trace.csv"));
        REQUIRE(rows.size() >= 13); // header + initial record + 12 steps
        // energies strictly decrease across accepted rows
        for (std::size_t i = 2; i < rows.size(); ++i) {
            CHECK(std::stod(rows[i][1]) < std::stod(rows[i - 1][1]));
        }
    }
    SECTION("resume continues the identical trajectory") {
        const std::string full = (dir / "full").string();
        const std::string half = (dir / "half").string();
        const std::string cont = (dir / "cont").string();
        const std::string log = (dir / "resume.log").string();
        const std::string base = "flow --kind particle --n 4 --jitter 0.1 --T 1e9 --seed 6 "
                                 "--snapshots '' ";
        REQUIRE(run_cli(base + "--max-steps 10 --out-dir " + full, log) == 0);
        REQUIRE(run_cli(base + "--max-steps 5 --out-dir " + half, log) == 0);
        REQUIRE(run_cli(base + "--max-steps 5 --out-dir " + cont + " --resume " + half +
                        "/manifest.json", log) == 0);
        const auto full_rows = parse_csv(slurp(full + "/trace.csv"));
        const auto cont_rows = parse_csv(slurp(cont + "/trace.csv"));
        REQUIRE(full_rows.size() == 12); // header + initial + 10
        REQUIRE(cont_rows.size() == 7);  // header + resumed initial + 5
        // rows 6..10 of the full run equal rows 1..5 of the continuation
        for (std::size_t k = 0; k < 6; ++k) {
            for (std::size_t c = 0; c < 4; ++c) {
                CHECK(std::stod(cont_rows[1 + k][c]) ==
                      Catch::Approx(std::stod(full_rows[6 + k][c])).epsilon(1e-15));
            }
        }
    }
    SECTION("figure-style run: 27^2 points order toward the hexagonal lattice") {
        const std::string out = (dir / "figure").string();
        const std::string log = (dir / "figure.log").string();
        REQUIRE(run_cli("flow --kind particle --n 27 --jitter 0.12 --T 1e9 --max-steps 157 "
                        "--seed 12 --snapshots 0,19,157 --out-dir " + out, log) == 0);
        CHECK(fs::exists(out + "/snapshot_0.svg"));
        CHECK(fs::exists(out + "/snapshot_19.svg"));
        CHECK(fs::exists(out + "/snapshot_157.svg"));
        const auto rows = parse_csv(slurp(out + "/trace.csv"));
        REQUIRE(rows.size() >= 100);
        // the qualitative content of the relaxation figures: energy drops and
        // the cloud orders toward a translated lattice
        const double q0 = std::stod(rows[1][1]);
        const double dev0 = std::stod(rows[1][3]);
        const double qT = std::stod(rows.back()[1]);
        const double devT = std::stod(rows.back()[3]);
        const double q_hex = 5.0 / (24.0 * std::sqrt(3.0)) / (27.0 * 27.0);
        CHECK(qT < q0);
        CHECK(devT < 0.25 * dev0);
        CHECK(std::abs(qT / q_hex - 1.0) < 0.05 * std::abs(q0 / q_hex - 1.0));
    }
    SECTION("pde flow reports decay diagnostics in the manifest") {
        const std::string out = (dir / "pde").string();
        const std::string log = (dir / "pde.log").string();
        REQUIRE(run_cli("flow --kind pde --m 16 --eta 0.02 --T 0.8 --seed 7 --out-dir " + out,
                        log) == 0);
        const std::string man = slurp(out + "/manifest.json");
        CHECK(man.find("decay_fitted_rate") != std::string::npos);
        CHECK(man.find("linearized_smallest_eigenvalue") != std::string::npos);
        CHECK(man.find("\"decay_pass\": true") != std::string::npos);
    }
}

TEST_CASE("cli: render") {
    const fs::path dir = temp_dir("cli_render");
    const std::string svg = (dir / "cells.svg").string();
    const std::string csv = (dir / "cells.csv").string();
    const std::string log = (dir / "render.log").string();
    REQUIRE(run_cli("render --n 4 --mode general --out-svg " + svg + " --out-csv " + csv, log) ==
            0);
    CHECK(parse_csv(slurp(csv)).size() == 17); // header + 16 cells
    CHECK(slurp(svg).find("<polygon") != std::string::npos);
}

TEST_CASE("cli: config file with flag precedence") {
    const fs::path dir = temp_dir("cli_config");
    const std::string cfg = (dir / "config.json").string();
    {
        std::ofstream out(cfg);
        out << R"({"n_list": "2,4", "eta": 0.02, "out": ")" << (dir / "from_config.csv").string()
            << R"("})";
    }
    const std::string log = (dir / "cfg.log").string();
    SECTION("config values apply") {
        REQUIRE(run_cli("sweep-eps --config " + cfg, log) == 0);
        CHECK(parse_csv(slurp((dir / "from_config.csv").string())).size() == 3);
    }
    SECTION("flags override the config") {
        const std::string other = (dir / "override.csv").string();
        REQUIRE(run_cli("sweep-eps --config " + cfg + " --n-list 2 --out " + other, log) == 0);
        CHECK(parse_csv(slurp(other)).size() == 2);
    }
}
