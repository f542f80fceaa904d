// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <qinv/attractor.hpp>
#include <qinv/invgraph.hpp>
#include <qinv/spectral.hpp>
#include <qinv/system_model.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qinv {

enum class Property { ULDI, ULI, NotULDI, NotULI, Inconclusive };

enum class CertificateKind {
    None,
    SeparationCert,     // map-by-map disjointness on one factor
    PathWitness,        // input pattern whose bounded orbit stays in the strip
    AttractorInStrip,   // the whole difference attractor lies in the strip
    OneDRule,           // closed-form rule for scalar systems
    GraphProof,         // no long proper paths among pieces that may meet the strip
    QSeparation,        // output windows of distinct inputs never coincide on the attractor
    PeriodicCollision,  // two periodic input sequences with identical outputs forever
    Implied             // follows from another verdict
};

std::string to_string(Property p);
std::string to_string(CertificateKind c);

/// Pairs of states sharing a quantization cell: floor(pi_p x) == floor(pi_p x').
/// States are in canonical coordinates.
struct QuantizationSetQ {
    int d = 1;
    int p = 1;

    bool contains(const Vector& x, const Vector& xp) const;
    /// True when some x in a and x' in b form a pair in Q.
    bool may_meet(const IntervalBox& a, const IntervalBox& b) const;
    /// True when every x in a and x' in b form a pair in Q.
    bool contains_all(const IntervalBox& a, const IntervalBox& b) const;
};

/// Replay data for witnesses: inputs (alphabet or difference values) and the
/// states visited, in canonical coordinates.
struct OrbitReplay {
    std::vector<Vector> inputs;
    std::vector<Vector> states;
    std::vector<Vector> partner_states;  // second orbit for collision witnesses
    bool ok = false;
    double margin = 0.0;  // ULDI: 1 - max |pi_p z|; ULI: distance of outputs to the grid
};

struct Verdict {
    Property property = Property::Inconclusive;
    std::optional<int> steps_k;
    std::optional<int> waiting_l;
    CertificateKind certificate = CertificateKind::None;
    int resolution_level = 0;
    bool independence_assumed = false;  // entries of A declared algebraically independent
    std::string rule;                   // rule or stage that decided
    std::string note;

    // SeparationCert
    std::string factor;  // "contractive" or "expansive"
    int history = 0;
    std::vector<bool> separated;
    // PathWitness / PeriodicCollision
    std::optional<PathWitness> witness;
    std::vector<std::size_t> witness_word;  // symbol indices
    std::vector<std::size_t> partner_word;
    OrbitReplay replay;
    // GraphProof
    int graph_depth = -1;
    std::vector<int> steps_profile;
    // AttractorInStrip
    std::size_t cover_cells = 0;

    bool decided() const { return property != Property::Inconclusive; }
};

struct AnalyzerOptions {
    int level = 8;
    int k_max = 8;
    std::size_t vertex_budget = 1000000;
    std::size_t cell_budget = std::size_t{1} << 24;
    bool strict_boundary = false;
    int max_history = 2;
    double marginal_tol = 1e-8;
    int uli_k_max = 4;
    int collision_period_max = 4;
    bool assume_transcendental = false;  // scalar case: declared transcendence of a
};

/// Contractive and expansive factors of a difference system in split coordinates.
struct SplitDynamics {
    SpectralSplit split;
    DifferenceSystem diff;
    Matrix Lc, Le;
    AffineIFS c_forward;   // xi -> A_c xi + Lc B v
    AffineIFS e_forward;   // eta -> A_e eta + Le B v
    AffineIFS e_backward;  // eta -> A_e^{-1}(eta - Le B v)
    Matrix c_to_p;         // pi_p Ec
    Matrix e_to_p;         // pi_p Ee
    std::vector<int> J_c;  // quantized rows depending on the contractive factor only
    std::vector<int> J_e;
};

SplitDynamics split_dynamics(const QuantizedSystem& canonical, double marginal_tol = 1e-8);

/// Factor attractors and the graph piece model used by decide_uldi.
struct UldiSetup {
    SplitDynamics sd;
    std::optional<AttractorApprox> Tc;  // forward contractive factor
    std::optional<AttractorApprox> Te;  // inverse expansive factor
    PieceModel model;
};

UldiSetup prepare_uldi(const QuantizedSystem& canonical, const AnalyzerOptions& opts);

/// Bounded orbit of the split dynamics for the given bi-infinite pattern, at
/// times 0..len of the flattened sequence, with the states in the range checked
/// against the closed strip.
OrbitReplay replay_witness(const SplitDynamics& sd, const PathWitness& w);

struct HistoryCheck {
    bool separated = false;
    bool within_budget = true;
    std::vector<bool> symbols;  // per difference symbol: every history word leads out of the strip
    std::size_t words = 0;
    std::size_t programs = 0;
};

/// Exact check on the difference system: for every history word of length h,
/// every state whose last h + 1 iterates lie in the closed strip is pushed out
/// of the open strip by every proper symbol. Entries are taken as the exact
/// rationals their doubles represent.
HistoryCheck history_polytope_check(const DifferenceSystem& diff, int h, std::size_t program_budget = 200000);

Verdict decide_uldi(const QuantizedSystem& sys, const AnalyzerOptions& opts = {});
Verdict decide_uldi(const QuantizedSystem& sys, int level);

Verdict decide_uli_contractive(const QuantizedSystem& sys, const AnalyzerOptions& opts = {});
Verdict decide_uli_contractive(const QuantizedSystem& sys, int level);

struct OneDResult {
    Verdict uldi;
    Verdict uli;
    std::string rule;  // contractive, expansive-close-inputs, separated-inputs, star, single-input
};

OneDResult classify_1d(double a, const std::vector<double>& alphabet, const AnalyzerOptions& opts = {});

struct OracleOptions {
    int depth = 12;
    int grid_density = 32;
    std::uint64_t seed = 1;
    std::size_t node_budget = 20000000;
    std::size_t samples = 20000;
};

struct OracleReport {
    bool collision = false;
    int max_survival = 0;  // longest run of equal outputs after differing first inputs
    int window = 1;        // max_survival + 1 when no collision
    int depth = 0;
    std::size_t initial_pairs = 0;
    std::size_t nodes = 0;
    std::vector<std::size_t> word, partner_word;
    Vector x0, x0_partner;
};

/// Depth-first search over input pairs with differing first inputs from
/// initial state pairs sharing a quantization cell. Requires d <= 2.
OracleReport brute_force_oracle(const QuantizedSystem& sys, const OracleOptions& opts = {});
OracleReport brute_force_oracle(const QuantizedSystem& sys, int depth, int grid_density);

struct LWMatrix {
    Matrix A;
    bool algebraic_independence = true;  // asserted by construction, not verified
    std::vector<int> exponents;
};

/// Matrix with entries e^{sqrt(n_ij)} for distinct square-free n_ij >= 1
/// given row-major.
LWMatrix lw_matrix(int d, const std::vector<int>& exponents);

bool is_square_free(long n);

/// Smallest l = lo + i step in [lo, hi] with frac(alpha_j + l theta_j) < eps for
/// all j. With one more alpha than theta, the first alpha is an offset for
/// the unit coordinate and frac(alpha_0 + l) < eps is also required.
std::optional<double> kronecker_witness(const std::vector<double>& theta, const std::vector<double>& alphas,
                                        double eps, double lo, double hi, double step);

/// Full analysis as run by the command line front end.
struct Analysis {
    QuantizedSystem canonical;
    Matrix T;
    std::optional<SpectralSplit> split;
    Verdict uldi;
    Verdict uli;
    std::optional<OneDResult> oned;
    std::string error;
};

Analysis analyze_system(const QuantizedSystem& sys, const AnalyzerOptions& opts = {});

}  // namespace qinv
