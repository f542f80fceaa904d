// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/io.hpp>

#include <qinv/errors.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qinv {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// 1-based line of the first occurrence of "key" in the text, or 0.
int line_of_key(const std::string& text, const std::string& key) {
    const auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

int line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

struct Ctx {
    const std::string& text;
    const std::string& origin;

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const int line = line_of_key(text, key);
        throw ParseError(origin + (line ? ":" + std::to_string(line) : std::string()) + ": " + key + ": " + msg);
    }
};

double scalar(const json& j, const Ctx& ctx, const std::string& key) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            return parse_scalar(j.get<std::string>());
        } catch (const ParseError& e) {
            ctx.fail(key, e.what());
        }
    }
    ctx.fail(key, "expected a number or a numeric string");
}

Matrix matrix(const json& j, const Ctx& ctx, const std::string& key) {
    if (!j.is_array() || j.empty()) ctx.fail(key, "expected a nonempty array of rows");
    const std::size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) ctx.fail(key, "row 1 is not a nonempty array");
    const std::size_t cols = j[0].size();
    Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            ctx.fail(key, "ragged matrix: row " + std::to_string(i + 1) + " has " +
                              std::to_string(j[i].is_array() ? j[i].size() : 0) + " entries, expected " +
                              std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = scalar(j[i][c], ctx, key);
    }
    return M;
}

}  // namespace

double parse_scalar(const std::string& s) {
    auto one = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            throw ParseError("not a number: '" + s + "'");
        }
        if (used != t.size()) throw ParseError("trailing characters in '" + s + "'");
        return v;
    };
    const auto slash = s.find('/');
    if (slash == std::string::npos) return one(s);
    const double den = one(s.substr(slash + 1));
    if (den == 0.0) throw ParseError("zero denominator in '" + s + "'");
    return one(s.substr(0, slash)) / den;
}

QuantizedSystem parse_system(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ":" + std::to_string(line_of_offset(text, e.byte ? e.byte - 1 : 0)) + ": " +
                         e.what());
    }
    const Ctx ctx{text, origin};
    if (!j.is_object()) throw ParseError(origin + ":1: expected an object");
    for (const char* req : {"A", "B", "alphabet", "p"})
        if (!j.contains(req)) throw ParseError(origin + ": missing field '" + req + "'");

    Matrix A;
    bool independent = false;
    if (j["A"].is_object()) {
        if (!j["A"].contains("exp_sqrt")) ctx.fail("A", "object form needs 'exp_sqrt'");
        const Matrix E = matrix(j["A"]["exp_sqrt"], ctx, "A");
        if (E.rows() != E.cols()) ctx.fail("A", "exponent matrix must be square");
        std::vector<int> ex;
        for (Eigen::Index r = 0; r < E.rows(); ++r)
            for (Eigen::Index c = 0; c < E.cols(); ++c) {
                const double x = E(r, c);
                if (x != std::floor(x)) ctx.fail("A", "exponents must be integers");
                ex.push_back(static_cast<int>(x));
            }
        try {
            const LWMatrix lw = lw_matrix(static_cast<int>(E.rows()), ex);
            A = lw.A;
            independent = lw.algebraic_independence;
        } catch (const Error& e) {
            ctx.fail("A", e.what());
        }
    } else {
        A = matrix(j["A"], ctx, "A");
    }
    const Matrix B = matrix(j["B"], ctx, "B");

    std::vector<Vector> alphabet;
    const json& al = j["alphabet"];
    if (!al.is_array() || al.empty()) ctx.fail("alphabet", "expected a nonempty array");
    for (const auto& u : al) {
        if (u.is_array()) {
            if (static_cast<Eigen::Index>(u.size()) != B.cols())
                ctx.fail("alphabet", "input of length " + std::to_string(u.size()) + " but B has " +
                                         std::to_string(B.cols()) + " columns");
            Vector v(static_cast<Eigen::Index>(u.size()));
            for (std::size_t i = 0; i < u.size(); ++i) v(static_cast<Eigen::Index>(i)) = scalar(u[i], ctx, "alphabet");
            alphabet.push_back(v);
        } else {
            if (B.cols() != 1) ctx.fail("alphabet", "scalar inputs need a single column B");
            alphabet.push_back(Vector::Constant(1, scalar(u, ctx, "alphabet")));
        }
    }
    if (!j["p"].is_number_integer()) ctx.fail("p", "expected an integer");
    const int p = j["p"].get<int>();
    double delta = 1.0;
    if (j.contains("delta")) delta = scalar(j["delta"], ctx, "delta");
    Matrix C;
    if (j.contains("C")) C = matrix(j["C"], ctx, "C");
    std::string name;
    if (j.contains("name")) {
        if (!j["name"].is_string()) ctx.fail("name", "expected a string");
        name = j["name"].get<std::string>();
    }
    if (j.contains("independent_entries")) {
        if (!j["independent_entries"].is_boolean()) ctx.fail("independent_entries", "expected true or false");
        independent = independent || j["independent_entries"].get<bool>();
    }
    try {
        QuantizedSystem sys = make_system(A, B, alphabet, p, delta, C, name);
        sys.independent_entries = independent;
        return sys;
    } catch (const Error& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

QuantizedSystem load_system(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    QuantizedSystem sys = parse_system(ss.str(), path.string());
    if (sys.name.empty()) sys.name = path.stem().string();
    return sys;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

ojson vec_json(const Vector& v) {
    ojson a = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

ojson mat_json(const Matrix& M) {
    ojson a = ojson::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) a.push_back(vec_json(M.row(r).transpose()));
    return a;
}

ojson verdict_json(const Verdict& v) {
    ojson o;
    o["property"] = to_string(v.property);
    o["steps_k"] = v.steps_k ? ojson(*v.steps_k) : ojson(nullptr);
    o["waiting_l"] = v.waiting_l ? ojson(*v.waiting_l) : ojson(nullptr);
    o["certificate"] = to_string(v.certificate);
    o["rule"] = v.rule;
    o["resolution_level"] = v.resolution_level;
    o["independence_assumed"] = v.independence_assumed;
    if (!v.note.empty()) o["note"] = v.note;
    if (v.certificate == CertificateKind::SeparationCert) {
        o["factor"] = v.factor;
        o["history"] = v.history;
        ojson s = ojson::array();
        for (bool b : v.separated) s.push_back(b);
        o["separated"] = s;
    }
    if (v.certificate == CertificateKind::AttractorInStrip || v.certificate == CertificateKind::QSeparation)
        o["cover_cells"] = v.cover_cells;
    if (v.graph_depth >= 0) o["graph_depth"] = v.graph_depth;
    if (!v.steps_profile.empty()) o["steps_profile"] = v.steps_profile;
    if (v.witness) {
        ojson w;
        w["left_cycle"] = v.witness->left_cycle;
        w["middle"] = v.witness->middle;
        w["right_cycle"] = v.witness->right_cycle;
        w["proper_position"] = v.witness->proper_position;
        w["check_begin"] = v.witness->check_begin;
        w["check_end"] = v.witness->check_end;
        o["witness"] = w;
    }
    if (!v.witness_word.empty()) o["word"] = v.witness_word;
    if (!v.partner_word.empty()) o["partner_word"] = v.partner_word;
    if (!v.replay.states.empty()) {
        ojson r;
        r["ok"] = v.replay.ok;
        r["margin"] = v.replay.margin;
        ojson in = ojson::array(), st = ojson::array(), ps = ojson::array();
        for (const auto& x : v.replay.inputs) in.push_back(vec_json(x));
        for (const auto& x : v.replay.states) st.push_back(vec_json(x));
        for (const auto& x : v.replay.partner_states) ps.push_back(vec_json(x));
        r["inputs"] = in;
        r["states"] = st;
        if (!ps.empty()) r["partner_states"] = ps;
        o["replay"] = r;
    }
    return o;
}

}  // namespace

std::string render_report(const Analysis& an, const ReportInfo& info) {
    ojson o;
    o["format"] = "qinv-report/1";
    o["input"] = info.input_name;
    o["input_hash"] = info.input_hash;
    o["system"] = an.canonical.name;
    o["dimension"] = an.canonical.d();
    o["p"] = an.canonical.p;
    o["options"] = {{"level", info.level}, {"k_max", info.k_max}, {"budget", info.budget},
                    {"strict_boundary", info.strict_boundary}};
    o["canonical_transform"] = mat_json(an.T);
    if (an.split) {
        ojson ev = ojson::array();
        for (const auto& z : an.split->eigvals) ev.push_back({z.real(), z.imag()});
        o["eigenvalues"] = ev;
        o["spectral_class"] = to_string(an.split->cls);
    }
    o["uldi"] = verdict_json(an.uldi);
    o["uli"] = verdict_json(an.uli);
    if (an.oned) {
        ojson d;
        d["rule"] = an.oned->rule;
        d["uldi"] = verdict_json(an.oned->uldi);
        d["uli"] = verdict_json(an.oned->uli);
        o["scalar_rule"] = d;
    }
    // Every line above is deterministic; the timestamp goes last on one line.
    std::string body = o.dump(2);
    body.pop_back();  // closing brace
    while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
    body += ",\n  \"timestamp\": " + ojson(info.timestamp).dump() + "\n}\n";
    return body;
}

std::filesystem::path write_report(const std::filesystem::path& dir, const std::string& hash, const std::string& body) {
    std::filesystem::create_directories(dir);
    std::filesystem::path path = dir / (hash + ".report.json");
    for (int n = 1; std::filesystem::exists(path); ++n) path = dir / (hash + "." + std::to_string(n) + ".report.json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << body;
    return path;
}

std::string current_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace qinv
