// SPDX-License-Identifier: MIT
#include "attnopt/core.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

namespace attnopt {

using nlohmann::json;

namespace {

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

double number(const json& v, const char* field) {
    if (!v.is_number()) throw ParseError(fmt::format("{}: expected a number", field));
    return v.get<double>();
}

const json& require(const json& doc, const char* field) {
    auto it = doc.find(field);
    if (it == doc.end()) throw ParseError(fmt::format("missing field '{}'", field));
    return *it;
}

int integer(const json& doc, const char* field) {
    const json& v = require(doc, field);
    if (!v.is_number_integer()) throw ParseError(fmt::format("{}: expected an integer", field));
    return v.get<int>();
}

// Accepts nested rows or a flat row-major array.
Mat matrix_from_json(const json& v, int rows, int cols, const char* field) {
    if (!v.is_array()) throw ParseError(fmt::format("{}: expected an array", field));
    if (rows < 0 || cols < 0) throw ValidationError(fmt::format("{}: negative dimension", field));
    Mat m(rows, cols);
    const bool nested = !v.empty() && v.front().is_array();
    if (nested) {
        if (static_cast<int>(v.size()) != rows)
            throw ValidationError(fmt::format("{}: expected {} rows, got {}", field, rows, v.size()));
        for (int i = 0; i < rows; ++i) {
            const json& row = v[i];
            if (!row.is_array() || static_cast<int>(row.size()) != cols)
                throw ValidationError(fmt::format("{}: row {} must have {} entries", field, i, cols));
            for (int j = 0; j < cols; ++j) m(i, j) = number(row[j], field);
        }
    } else {
        if (static_cast<long>(v.size()) != static_cast<long>(rows) * cols)
            throw ValidationError(fmt::format("{}: expected {} entries", field, rows * cols));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = number(v[i * cols + j], field);
    }
    return m;
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
    json doc;
    doc["n"] = inst.n;
    doc["k"] = inst.k;
    doc["d_kq"] = inst.d_kq();
    doc["d_v"] = inst.d_v();
    doc["Q"] = matrix_to_json(inst.Q);
    doc["K"] = matrix_to_json(inst.K);
    doc["V"] = matrix_to_json(inst.V);
    json u = json::array();
    for (Eigen::Index i = 0; i < inst.u.size(); ++i) u.push_back(inst.u(i));
    doc["u"] = u;
    json rewards = json::array();
    for (const auto& f : inst.rewards)
        rewards.push_back({{"kind", std::string(to_string(f.kind))}, {"params", f.params}});
    doc["rewards"] = rewards;
    doc["reward_of_item"] = inst.reward_of_item;
    if (inst.value_log_scale != 0.0) doc["value_log_scale"] = inst.value_log_scale;
    return doc.dump();
}

Instance instance_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("malformed instance file: {}", e.what()));
    }
    if (!doc.is_object()) throw ParseError("instance file must hold an object");
    Instance inst;
    inst.n = integer(doc, "n");
    inst.k = integer(doc, "k");
    const int dkq = integer(doc, "d_kq");
    const int dv = integer(doc, "d_v");
    if (inst.n < 1) throw ValidationError("n must be positive");
    inst.Q = matrix_from_json(require(doc, "Q"), inst.n, dkq, "Q");
    inst.K = matrix_from_json(require(doc, "K"), inst.n, dkq, "K");
    inst.V = matrix_from_json(require(doc, "V"), inst.n, dv, "V");
    const json& u = require(doc, "u");
    if (!u.is_array() || static_cast<int>(u.size()) != dv)
        throw ValidationError("u must be an array of d_v numbers");
    inst.u.resize(dv);
    for (int i = 0; i < dv; ++i) inst.u(i) = number(u[i], "u");
    const json& rewards = require(doc, "rewards");
    if (!rewards.is_array()) throw ParseError("rewards: expected an array");
    for (const json& r : rewards) {
        if (!r.is_object()) throw ParseError("rewards: expected objects");
        const json& kind = require(r, "kind");
        if (!kind.is_string()) throw ParseError("rewards.kind: expected a string");
        RewardFunction f;
        f.kind = parse_reward_kind(kind.get<std::string>());
        if (auto it = r.find("params"); it != r.end()) {
            if (!it->is_array()) throw ParseError("rewards.params: expected an array");
            for (const json& p : *it) f.params.push_back(number(p, "rewards.params"));
        }
        inst.rewards.push_back(std::move(f));
    }
    const json& roi = require(doc, "reward_of_item");
    if (!roi.is_array()) throw ParseError("reward_of_item: expected an array");
    for (const json& r : roi) {
        if (!r.is_number_integer()) throw ParseError("reward_of_item: expected integers");
        inst.reward_of_item.push_back(r.get<int>());
    }
    if (auto it = doc.find("value_log_scale"); it != doc.end())
        inst.value_log_scale = number(*it, "value_log_scale");
    inst.validate();
    return inst;
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return instance_from_json(ss.str());
}

void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError(fmt::format("cannot write '{}'", path));
    out << instance_to_json(inst) << '\n';
}

}  // namespace attnopt
