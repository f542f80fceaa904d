// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
//
// qinv: decide uniform left (D-)invertibility of quantized linear systems.
// Exit codes: 0 decided, 2 inconclusive, 1 error or failed example.
#include <qinv/analyzer.hpp>
#include <qinv/attractor.hpp>
#include <qinv/errors.hpp>
#include <qinv/invgraph.hpp>
#include <qinv/io.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace qinv;

namespace {

struct RunConfig {
    std::string input;
    int level = 8;
    int k_max = 8;
    std::size_t budget = 1000000;
    bool strict_boundary = false;
    std::string out = "qinv-out";
    std::vector<int> plane{0, 1};
};

AnalyzerOptions analyzer_options(const RunConfig& c) {
    AnalyzerOptions o;
    o.level = c.level;
    o.k_max = c.k_max;
    o.vertex_budget = c.budget;
    o.strict_boundary = c.strict_boundary;
    return o;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string steps_text(const Verdict& v) {
    std::string s = to_string(v.property);
    if (v.steps_k) s += " k=" + std::to_string(*v.steps_k);
    if (v.waiting_l) s += " l=" + std::to_string(*v.waiting_l);
    s += " [" + to_string(v.certificate) + (v.rule.empty() ? "" : ", " + v.rule) + "]";
    if (v.independence_assumed) s += " (independence assumed)";
    return s;
}

int cmd_analyze(const RunConfig& c) {
    const std::string text = read_file(c.input);
    QuantizedSystem sys = parse_system(text, c.input);
    if (sys.name.empty()) sys.name = fs::path(c.input).stem().string();
    const Analysis an = analyze_system(sys, analyzer_options(c));
    ReportInfo info;
    info.input_name = fs::path(c.input).filename().string();
    info.input_hash = hex64(fnv1a64(text));
    info.level = c.level;
    info.k_max = c.k_max;
    info.budget = c.budget;
    info.strict_boundary = c.strict_boundary;
    info.timestamp = current_timestamp();
    const fs::path path = write_report(c.out, info.input_hash, render_report(an, info));
    std::cout << "system: " << sys.name << " (d=" << an.canonical.d() << ", p=" << an.canonical.p << ")\n";
    if (an.split) std::cout << "spectrum: " << to_string(an.split->cls) << "\n";
    std::cout << "ULDI: " << steps_text(an.uldi) << "\n";
    if (!an.uldi.note.empty()) std::cout << "  note: " << an.uldi.note << "\n";
    std::cout << "ULI: " << steps_text(an.uli) << "\n";
    if (an.oned) std::cout << "scalar rule: " << an.oned->rule << "\n";
    std::cout << "report: " << path.string() << "\n";
    return an.uldi.decided() ? 0 : 2;
}

void emit_cover(const BoxCover& cover, const fs::path& stem, const std::vector<int>& plane, const std::string& title) {
    fs::create_directories(stem.parent_path());
    {
        std::ofstream csv(stem.string() + ".csv");
        write_csv(csv, cover);
    }
    std::ofstream svg(stem.string() + ".svg");
    const int i = cover.dim > 1 ? plane[0] : 0;
    const int j = cover.dim > 1 ? plane[1] : 0;
    if (i < 0 || j < 0 || i >= cover.dim || j >= cover.dim) throw DimensionMismatch("--plane outside the cover dimension");
    write_svg(svg, cover, i, j, title);
    std::cout << stem.string() << ".{csv,svg}: " << cover.size() << " cells at level " << cover.level << "\n";
}

int cmd_attractor(const RunConfig& c, const std::string& factor) {
    QuantizedSystem sys = load_system(c.input);
    const QuantizedSystem canon = canonicalize(sys).system;
    const fs::path dir(c.out);
    AnalyzerOptions o = analyzer_options(c);
    bool any = false;
    if (factor == "system") {
        const AttractorApprox H = compute_attractor(forward_ifs(canon.A, canon.B, canon.alphabet), c.level);
        emit_cover(H.cover, dir / (sys.name + ".system"), c.plane, sys.name + " attractor");
        std::cout << "hausdorff bound: " << H.hausdorff_bound << "\n";
        return 0;
    }
    const UldiSetup st = prepare_uldi(canon, o);
    if ((factor == "auto" || factor == "contractive") && st.Tc) {
        emit_cover(st.Tc->cover, dir / (sys.name + ".contractive"), c.plane, sys.name + " difference system on Ec");
        any = true;
    }
    if ((factor == "auto" || factor == "expansive") && st.Te) {
        emit_cover(st.Te->cover, dir / (sys.name + ".expansive"), c.plane,
                   sys.name + " inverse difference system on Ee");
        any = true;
    }
    if (!any) throw Error("no " + factor + " factor for this system");
    return 0;
}

int cmd_graph(const RunConfig& c, int k) {
    QuantizedSystem sys = load_system(c.input);
    const QuantizedSystem canon = canonicalize(sys).system;
    const UldiSetup st = prepare_uldi(canon, analyzer_options(c));
    const InvGraph g = build_graph(st.model, k, c.budget);
    fs::create_directories(c.out);
    const fs::path path = fs::path(c.out) / (sys.name + ".graph" + std::to_string(k) + ".txt");
    std::ofstream os(path);
    write_edge_list(os, g);
    const InvGraph in = prune_internal(g).graph;
    const InvGraph maybe = prune_outside(g);
    std::cout << "vertices: " << g.num_vertices() << ", inside: " << in.alive_count()
              << ", meeting strip: " << maybe.alive_count() << "\n";
    std::cout << "long proper paths inside: " << (has_arbitrarily_long_proper_paths(in).found ? "yes" : "no")
              << ", meeting strip: " << (has_arbitrarily_long_proper_paths(maybe).found ? "yes" : "no") << "\n";
    std::cout << "edge list: " << path.string() << "\n";
    return 0;
}

int cmd_classify1d(const RunConfig& c, double a, const std::vector<std::string>& alphabet, bool transcendental) {
    std::vector<double> U;
    for (const auto& s : alphabet) U.push_back(parse_scalar(s));
    AnalyzerOptions o = analyzer_options(c);
    o.assume_transcendental = transcendental;
    const OneDResult r = classify_1d(a, U, o);
    std::cout << "rule: " << r.rule << "\n";
    std::cout << "ULDI: " << steps_text(r.uldi) << "\n";
    if (!r.uldi.replay.states.empty()) {
        std::cout << "  witness orbit:";
        for (std::size_t t = 0; t + 1 < r.uldi.replay.states.size(); ++t) std::cout << " " << r.uldi.replay.states[t](0);
        std::cout << "\n";
    }
    std::cout << "ULI: " << steps_text(r.uli) << "\n";
    return r.uldi.decided() ? 0 : 2;
}

int cmd_oracle(const RunConfig& c, int depth, int density, std::uint64_t seed) {
    const QuantizedSystem sys = load_system(c.input);
    OracleOptions o;
    o.depth = depth;
    o.grid_density = density;
    o.seed = seed;
    const OracleReport r = brute_force_oracle(sys, o);
    std::cout << "initial pairs: " << r.initial_pairs << ", nodes: " << r.nodes << "\n";
    if (r.collision) {
        std::cout << "collision at depth " << depth << ": words";
        for (auto s : r.word) std::cout << " " << s;
        std::cout << " /";
        for (auto s : r.partner_word) std::cout << " " << s;
        std::cout << "\n";
    } else {
        std::cout << "no collision; window " << r.window << "\n";
    }
    return 0;
}

struct ExampleCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

int cmd_examples(const RunConfig& c, const std::string& dir) {
    if (!fs::is_directory(dir)) {
        std::cerr << "error: examples directory '" << dir << "' not found\n";
        return 1;
    }
    AnalyzerOptions o = analyzer_options(c);
    std::vector<ExampleCheck> rows;
    auto run = [&](const std::string& name, const std::function<ExampleCheck()>& fn) {
        try {
            rows.push_back(fn());
        } catch (const std::exception& e) {
            rows.push_back({name, false, e.what()});
        }
    };
    run("ex1", [&] {
        const QuantizedSystem s = load_system(fs::path(dir) / "ex1.sys");
        const Verdict v = decide_uldi(s, o);
        return ExampleCheck{"ex1",
                            v.property == Property::NotULDI && v.certificate == CertificateKind::AttractorInStrip,
                            steps_text(v)};
    });
    run("ex2", [&] {
        const QuantizedSystem s = load_system(fs::path(dir) / "ex2.sys");
        const Verdict v = decide_uldi(s, o);
        return ExampleCheck{"ex2",
                            v.property == Property::ULDI && v.steps_k == 1 &&
                                v.certificate == CertificateKind::SeparationCert,
                            steps_text(v)};
    });
    run("ex3", [&] {
        const QuantizedSystem s = load_system(fs::path(dir) / "ex3.sys");
        std::vector<double> U;
        for (const auto& u : s.alphabet) U.push_back((s.B * u)(0));
        const OneDResult r = classify_1d(s.A(0, 0), U, o);
        const Verdict uli = decide_uli_contractive(s, o);
        bool orbit = r.uldi.replay.ok && r.uldi.replay.states.size() >= 2 &&
                     std::fabs(std::fabs(r.uldi.replay.states[0](0)) - 2.0 / 3.0) < 1e-12 &&
                     std::fabs(r.uldi.replay.states[0](0) + r.uldi.replay.states[1](0)) < 1e-12;
        return ExampleCheck{"ex3",
                            r.uldi.property == Property::NotULDI && orbit && uli.property == Property::ULI &&
                                uli.steps_k == 1,
                            steps_text(r.uldi) + "; " + steps_text(uli)};
    });
    int passed = 0;
    for (const auto& r : rows) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  " << r.detail << "\n";
        passed += r.pass;
    }
    std::cout << passed << "/" << rows.size() << " examples pass\n";
    return passed == static_cast<int>(rows.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qinv: uniform left (D-)invertibility of output-quantized linear systems"};
    app.require_subcommand(1);
    RunConfig cfg;
    auto common = [&](CLI::App* sub, bool needs_input) {
        if (needs_input) sub->add_option("input", cfg.input, "system file")->required()->check(CLI::ExistingFile);
        sub->add_option("--level", cfg.level, "grid level, cell width 2^-level")->check(CLI::Range(4, 16));
        sub->add_option("--kmax", cfg.k_max, "largest graph depth")->check(CLI::Range(0, 64));
        sub->add_option("--budget", cfg.budget, "vertex budget")->check(CLI::PositiveNumber);
        sub->add_flag("--strict-boundary", cfg.strict_boundary, "report Inconclusive when a piece meets the strip boundary");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--plane", cfg.plane, "projection axes for SVG output")->expected(2);
    };

    auto* analyze = app.add_subcommand("analyze", "decide ULDI and ULI and write a report");
    common(analyze, true);

    auto* attractor = app.add_subcommand("attractor", "write attractor covers as CSV and SVG");
    common(attractor, true);
    std::string factor = "auto";
    attractor->add_option("--factor", factor, "auto, contractive, expansive or system")
        ->check(CLI::IsMember({"auto", "contractive", "expansive", "system"}));

    auto* graph = app.add_subcommand("graph", "write the depth-k invertibility graph as an edge list");
    common(graph, true);
    int depth_k = 1;
    graph->add_option("-k,--depth", depth_k, "graph depth")->check(CLI::Range(0, 32));

    auto* c1d = app.add_subcommand("classify1d", "scalar system x+ = a x + u");
    common(c1d, false);
    double a = 0.0;
    std::vector<std::string> alphabet;
    bool transcendental = false;
    c1d->add_option("-a", a, "dynamics coefficient")->required();
    c1d->add_option("-u,--alphabet", alphabet, "inputs (decimals or fractions)")->required();
    c1d->add_flag("--transcendental", transcendental, "declare a transcendental");

    auto* oracle = app.add_subcommand("oracle", "brute-force output collision search (d <= 2)");
    common(oracle, true);
    int odepth = 12, density = 32;
    std::uint64_t seed = 1;
    oracle->add_option("--depth", odepth, "search depth")->check(CLI::Range(1, 14));
    oracle->add_option("--density", density, "grid points per unit")->check(CLI::PositiveNumber);
    oracle->add_option("--seed", seed, "sampling seed");

    auto* examples = app.add_subcommand("examples", "run the bundled example systems as golden checks");
    common(examples, false);
    std::string exdir = "systems";
    examples->add_option("--dir", exdir, "directory holding ex1.sys, ex2.sys, ex3.sys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    try {
        if (*analyze) return cmd_analyze(cfg);
        if (*attractor) return cmd_attractor(cfg, factor);
        if (*graph) return cmd_graph(cfg, depth_k);
        if (*c1d) return cmd_classify1d(cfg, a, alphabet, transcendental);
        if (*oracle) return cmd_oracle(cfg, odepth, density, seed);
        if (*examples) return cmd_examples(cfg, exdir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
