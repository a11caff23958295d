#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "nhbraid/circuit.hpp"
#include "nhbraid/errors.hpp"
#include "nhbraid/matrix.hpp"

namespace nhbraid {

struct BlochAngles2 {
    double theta = 0.0;
    double phi = 0.0;
    bool phi_degenerate = false;
};

struct BlochAngles4 {
    double theta_A = 0.0, theta_B = 0.0, theta_AB = 0.0;
    double phi_A = 0.0, phi_B = 0.0, phi_AB = 0.0;
    bool phi_A_degenerate = false, phi_B_degenerate = false, phi_AB_degenerate = false;
    bool sector_A_empty = false, sector_B_empty = false, sector_minus_empty = false;
};

struct ReconstructedState {
    CVec amplitudes;
    int band = 0;
    double k = 0.0;
    bool unreliable = false;  ///< some angle was set by convention (pole or empty sector)
};

/// Multiply by a global phase so that the last component is real and non-negative.
inline CVec canonical_gauge(CVec v) {
    const cplx last = v.back();
    if (std::abs(last) > 0.0) {
        const cplx ph = std::conj(last) / std::abs(last);
        for (auto& x : v) x *= ph;
        v.back() = std::abs(last);
    }
    return v;
}

struct Pauli3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

/// Clamp an arccos argument; in strict mode an overshoot beyond 1e-6 is an error.
inline double clamp_unit(double v, bool strict, int* clamp_events = nullptr) {
    if (std::abs(v) > 1.0) {
        if (strict && std::abs(v) > 1.0 + 1e-6)
            throw protocol_error("ExpectationOutOfRange", "expectation " + std::to_string(v) + " outside [-1, 1]");
        if (clamp_events && std::abs(v) > 1.0 + 1e-12) ++*clamp_events;
        return v > 0 ? 1.0 : -1.0;
    }
    return v;
}

/// P(system bit 0) - P(system bit 1) for each of the x, y, z records of one (k, band).
inline Pauli3 pauli_expectations_2band(const std::vector<const MeasurementRecord*>& records) {
    Pauli3 out;
    bool seen[3] = {false, false, false};
    for (const auto* r : records) {
        if (r->probabilities.size() != 2) throw protocol_error("IncompleteSettings", "two-band record must cover one system qubit");
        const double v = r->probabilities[0] - r->probabilities[1];
        switch (r->setting.alpha) {
            case 'x': out.x = v; seen[0] = true; break;
            case 'y': out.y = v; seen[1] = true; break;
            case 'z': out.z = v; seen[2] = true; break;
            default: break;
        }
    }
    if (!(seen[0] && seen[1] && seen[2])) throw protocol_error("IncompleteSettings", "need x, y and z settings");
    return out;
}

inline BlochAngles2 bloch_angles_2band(double sx, double sy, double sz, bool strict = true, int* clamp_events = nullptr) {
    const double r2 = sx * sx + sy * sy + sz * sz;
    if (strict && r2 > (1.0 + 1e-6) * (1.0 + 1e-6))
        throw protocol_error("ExpectationOutOfRange", "Bloch vector outside the unit ball");
    BlochAngles2 a;
    a.theta = std::acos(clamp_unit(sz, strict, clamp_events));
    if (sx * sx + sy * sy < 1e-12) {
        a.phi = 0.0;
        a.phi_degenerate = true;
    } else {
        a.phi = std::atan2(sy, sx);
    }
    return a;
}

inline ReconstructedState reconstruct_2band(const BlochAngles2& a) {
    ReconstructedState s;
    s.amplitudes = canonical_gauge({std::cos(a.theta / 2), std::sin(a.theta / 2) * std::polar(1.0, a.phi)});
    s.unreliable = a.phi_degenerate;
    return s;
}

/// Expectations of one state vector (used as an oracle and for trajectory construction).
inline Pauli3 pauli_of_state(const CVec& v) {
    const double n = std::norm(v[0]) + std::norm(v[1]);
    const cplx c = std::conj(v[0]) * v[1];
    return {2 * c.real() / n, 2 * c.imag() / n, (std::norm(v[0]) - std::norm(v[1])) / n};
}

/// Conditional expectations of the two-qubit protocol, with sector intensities.
struct Conditional4 {
    Pauli3 A, B, minus_AB;
    double I_A = 0.0, I_B = 0.0, I_minus = 0.0;
    double z_plus_minus_AB = 0.0;
    bool empty_A = false, empty_B = false, empty_minus = false;
};

inline Conditional4 conditional_expectations_4band(const std::vector<const MeasurementRecord*>& records) {
    Conditional4 c;
    int seen = 0;
    for (const auto* r : records) {
        if (r->probabilities.size() != 4) throw protocol_error("IncompleteSettings", "four-band record must cover two system qubits");
        const auto& p = r->probabilities;  // index = 2·q1 + q2
        auto set = [&](Pauli3& dst, double v) {
            if (r->setting.alpha == 'x') dst.x = v;
            else if (r->setting.alpha == 'y') dst.y = v;
            else dst.z = v;
        };
        const int bit = (static_cast<int>(r->setting.family) - 1) * 3 + (r->setting.alpha - 'x');
        switch (r->setting.family) {
            case Family::PlusMinusA:
                set(c.A, p[0] - p[1]);
                if (r->setting.alpha == 'z') c.I_A = p[0] + p[1];
                break;
            case Family::PlusMinusB:
                set(c.B, p[2] - p[3]);
                if (r->setting.alpha == 'z') c.I_B = p[2] + p[3];
                break;
            case Family::MinusAB:
                set(c.minus_AB, p[1] - p[3]);
                if (r->setting.alpha == 'z') c.I_minus = p[1] + p[3];
                break;
            case Family::PlusMinusAB:
                if (r->setting.alpha == 'z') c.z_plus_minus_AB = (p[0] + p[1]) - (p[2] + p[3]);
                break;
            case Family::Single: throw protocol_error("IncompleteSettings", "one-qubit record in a two-qubit set");
        }
        if (bit >= 0 && bit < 12) seen |= 1 << bit;
    }
    // All families need their z record; A, B and the minus sector also need x and y.
    const int required = 0b100'111'111'111;
    if ((seen & required) != required) throw protocol_error("IncompleteSettings", "four-band settings are incomplete");
    c.empty_A = c.I_A < 1e-10;
    c.empty_B = c.I_B < 1e-10;
    c.empty_minus = c.I_minus < 1e-10;
    return c;
}

inline BlochAngles4 bloch_angles_4band(const Conditional4& c, bool strict = true, int* clamp_events = nullptr) {
    BlochAngles4 a;
    a.sector_A_empty = c.empty_A;
    a.sector_B_empty = c.empty_B;
    a.sector_minus_empty = c.empty_minus;
    auto polar_angle = [&](double z, double intensity, bool empty) {
        return empty ? 0.0 : std::acos(clamp_unit(z / intensity, strict, clamp_events));
    };
    auto azimuth = [](const Pauli3& s, double intensity, bool empty, bool& flag) {
        if (empty) {
            flag = true;
            return 0.0;
        }
        const double x = s.x / intensity, y = s.y / intensity;
        if (x * x + y * y < 1e-12) {
            flag = true;
            return 0.0;
        }
        return std::atan2(-y, x);
    };
    a.theta_A = polar_angle(c.A.z, c.I_A, c.empty_A);
    a.theta_B = polar_angle(c.B.z, c.I_B, c.empty_B);
    a.theta_AB = std::acos(clamp_unit(c.z_plus_minus_AB, strict, clamp_events));
    a.phi_A = azimuth(c.A, c.I_A, c.empty_A, a.phi_A_degenerate);
    a.phi_B = azimuth(c.B, c.I_B, c.empty_B, a.phi_B_degenerate);
    a.phi_AB = azimuth(c.minus_AB, c.I_minus, c.empty_minus, a.phi_AB_degenerate);
    return a;
}

inline ReconstructedState reconstruct_4band(const BlochAngles4& a) {
    const double cA = std::cos(a.theta_A / 2), sA = std::sin(a.theta_A / 2);
    const double cB = std::cos(a.theta_B / 2), sB = std::sin(a.theta_B / 2);
    const double cAB = std::cos(a.theta_AB / 2), sAB = std::sin(a.theta_AB / 2);
    ReconstructedState s;
    s.amplitudes = {cA * cAB * std::polar(1.0, a.phi_A + a.phi_AB), sA * cAB * std::polar(1.0, a.phi_AB),
                    cB * sAB * std::polar(1.0, a.phi_B), cplx{sB * sAB, 0.0}};
    s.unreliable = a.phi_A_degenerate || a.phi_B_degenerate || a.phi_AB_degenerate;
    return s;
}

/// Exact expectation families a state would produce (oracle for the measurement chain).
inline Conditional4 conditional_of_state(const CVec& v) {
    const double n = norm2(v) * norm2(v);
    Conditional4 c;
    auto spinor = [](cplx a, cplx b) {
        const cplx ab = std::conj(a) * b;
        return Pauli3{2 * ab.real(), 2 * ab.imag(), std::norm(a) - std::norm(b)};
    };
    c.A = spinor(v[0] / std::sqrt(n), v[1] / std::sqrt(n));
    c.B = spinor(v[2] / std::sqrt(n), v[3] / std::sqrt(n));
    c.minus_AB = spinor(v[1] / std::sqrt(n), v[3] / std::sqrt(n));
    c.I_A = (std::norm(v[0]) + std::norm(v[1])) / n;
    c.I_B = (std::norm(v[2]) + std::norm(v[3])) / n;
    c.I_minus = (std::norm(v[1]) + std::norm(v[3])) / n;
    c.z_plus_minus_AB = c.I_A - c.I_B;
    c.empty_A = c.I_A < 1e-10;
    c.empty_B = c.I_B < 1e-10;
    c.empty_minus = c.I_minus < 1e-10;
    return c;
}

struct Reconstruction {
    std::vector<std::vector<ReconstructedState>> states;  ///< [band][k]
    int clamp_events = 0;
};

/// Rebuild every (band, k) state from a protocol run. Strict range checks apply in exact mode.
inline Reconstruction reconstruct_all(const ProtocolResult& run, ShotMode mode) {
    const std::size_t nk = run.k_grid.size(), nb = static_cast<std::size_t>(run.n_bands);
    const std::size_t per = run.records.size() / (nk * nb);
    const bool strict = mode == ShotMode::Exact;
    Reconstruction out;
    out.states.assign(nb, std::vector<ReconstructedState>(nk));
    for (std::size_t ki = 0; ki < nk; ++ki)
        for (std::size_t b = 0; b < nb; ++b) {
            std::vector<const MeasurementRecord*> recs;
            for (std::size_t s = 0; s < per; ++s) recs.push_back(&run.records[(ki * nb + b) * per + s]);
            ReconstructedState st;
            if (nb == 2) {
                const Pauli3 p = pauli_expectations_2band(recs);
                st = reconstruct_2band(bloch_angles_2band(p.x, p.y, p.z, strict, &out.clamp_events));
            } else {
                st = reconstruct_4band(bloch_angles_4band(conditional_expectations_4band(recs), strict, &out.clamp_events));
            }
            st.band = static_cast<int>(b);
            st.k = run.k_grid[ki];
            out.states[b][ki] = std::move(st);
        }
    return out;
}

}  // namespace nhbraid
