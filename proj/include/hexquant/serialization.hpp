#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hexquant/deformation.hpp"
#include "hexquant/errors.hpp"

namespace hexquant {

/// JSON descriptor of a deformation field.
///
/// Fourier kind:
///   {"kind": "fourier", "eta": 0.02,
///    "modes": [{"k": [1,0], "cos": [ax, ay], "sin": [bx, by]}, ...]}
///
/// Grid kind:
///   {"kind": "grid", "eta": 0.02, "m": 32,
///    "values": [[y1, y2], ...]}            // row-major, m*m entries
///
/// An optional "n" records the lattice scale a run used; it is ignored here.
inline nlohmann::json field_to_json(const DeformationField& field) {
    nlohmann::json j;
    j["eta"] = field.eta();
    if (field.kind() == DeformationField::Kind::fourier) {
        j["kind"] = "fourier";
        nlohmann::json modes = nlohmann::json::array();
        for (const FourierMode& md : field.modes()) {
            modes.push_back({{"k", {md.k1, md.k2}},
                             {"cos", {md.cos_coef.x1, md.cos_coef.x2}},
                             {"sin", {md.sin_coef.x1, md.sin_coef.x2}}});
        }
        j["modes"] = std::move(modes);
    } else {
        j["kind"] = "grid";
        j["m"] = field.grid_size();
        nlohmann::json values = nlohmann::json::array();
        for (const Vec2& v : field.grid_values()) values.push_back({v.x1, v.x2});
        j["values"] = std::move(values);
    }
    return j;
}

inline DeformationField field_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double eta = j.value("eta", 0.0);
    if (kind == "fourier") {
        std::vector<FourierMode> modes;
        for (const auto& mj : j.value("modes", nlohmann::json::array())) {
            FourierMode md;
            md.k1 = mj.at("k").at(0).get<int>();
            md.k2 = mj.at("k").at(1).get<int>();
            md.cos_coef = {mj.at("cos").at(0).get<double>(), mj.at("cos").at(1).get<double>()};
            md.sin_coef = {mj.at("sin").at(0).get<double>(), mj.at("sin").at(1).get<double>()};
            modes.push_back(md);
        }
        return DeformationField::fourier(std::move(modes), eta);
    }
    if (kind == "grid") {
        const int m = j.at("m").get<int>();
        std::vector<Vec2> values;
        for (const auto& vj : j.at("values")) {
            values.push_back({vj.at(0).get<double>(), vj.at(1).get<double>()});
        }
        return DeformationField::grid(m, std::move(values), eta);
    }
    throw geometry_error("field_from_json: unknown kind '" + kind + "'");
}

inline void save_field(const std::string& path, const DeformationField& field) {
    std::ofstream out(path);
    if (!out) throw geometry_error("save_field: cannot open " + path);
    out << field_to_json(field).dump(2) << "\n";
}

inline DeformationField load_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw geometry_error("load_field: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return field_from_json(j);
}

} // namespace hexquant
