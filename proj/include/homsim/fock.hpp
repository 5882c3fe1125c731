#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace homsim {

namespace detail {

inline double factorial_d(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(33);
    t[0] = 1.0;
    for (int i = 1; i < 33; ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  return table.at(static_cast<std::size_t>(n));
}

inline double binom_d(int n, int k) {
  return factorial_d(n) / (factorial_d(k) * factorial_d(n - k));
}

}  // namespace detail

/// Output amplitudes of a 50:50 beamsplitter for a Fock input |m, n>
/// (m photons in port a, n in port b), in one spectral mode.
/// Convention: a^dag -> (c^dag + d^dag)/sqrt(2), b^dag -> (c^dag - d^dag)/sqrt(2).
/// Returns amplitude[j] for the outcome |j, m+n-j>.
inline std::vector<double> beamsplitter_fock_amplitudes(int m, int n) {
  std::vector<double> amp(static_cast<std::size_t>(m + n) + 1, 0.0);
  const double norm = std::pow(2.0, -0.5 * (m + n));
  for (int i = 0; i <= m; ++i) {
    for (int k = 0; k <= n; ++k) {
      const int j = i + k;
      const double sign = ((n - k) % 2 == 0) ? 1.0 : -1.0;
      amp[static_cast<std::size_t>(j)] +=
          detail::binom_d(m, i) * detail::binom_d(n, k) * sign * norm;
    }
  }
  for (int j = 0; j <= m + n; ++j) {
    amp[static_cast<std::size_t>(j)] *=
        std::sqrt(detail::factorial_d(j) * detail::factorial_d(m + n - j)) /
        std::sqrt(detail::factorial_d(m) * detail::factorial_d(n));
  }
  return amp;
}

/// Joint photon-number distribution over the two output ports for Fock
/// inputs with partial distinguishability. Port a carries na photons in the
/// reference spectral mode; port b carries nb photons in the superposed mode
/// overlap * (mode a) + sqrt(1 - overlap^2) * (orthogonal mode).
/// Returns probability for each (n_c, n_d) with n_c + n_d = na + nb.
inline std::map<std::pair<int, int>, double> beamsplitter_output_distribution(
    int na, int nb, double overlap) {
  if (na < 0 || nb < 0) throw std::domain_error("photon numbers must be >= 0");
  if (!(overlap >= 0.0 && overlap <= 1.0))
    throw std::domain_error("overlap must be in [0, 1]");
  const double o = overlap;
  const double s = std::sqrt(std::max(0.0, 1.0 - o * o));

  std::map<std::pair<int, int>, double> out;
  // Split port b's photons between the matched (k) and orthogonal (nb - k)
  // spectral modes; the two modes mix independently at the beamsplitter and
  // their occupation numbers are distinguishable in principle, so their
  // probabilities add incoherently per (jm, jp) pattern.
  for (int k = 0; k <= nb; ++k) {
    const double amp_b =
        std::sqrt(detail::binom_d(nb, k)) * std::pow(o, k) * std::pow(s, nb - k);
    if (amp_b == 0.0) continue;
    const double w = amp_b * amp_b;
    const auto matched = beamsplitter_fock_amplitudes(na, k);
    const auto ortho = beamsplitter_fock_amplitudes(0, nb - k);
    for (int jm = 0; jm < static_cast<int>(matched.size()); ++jm) {
      const double am = matched[static_cast<std::size_t>(jm)];
      if (am == 0.0) continue;
      for (int jp = 0; jp < static_cast<int>(ortho.size()); ++jp) {
        const double ap = ortho[static_cast<std::size_t>(jp)];
        if (ap == 0.0) continue;
        const int nc = jm + jp;
        const int nd = (na + k - jm) + (nb - k - jp);
        out[{nc, nd}] += w * am * am * ap * ap;
      }
    }
  }
  return out;
}

/// Photon source entering one beamsplitter port.
struct FockSource {
  enum class Kind { Single, Coherent };
  Kind kind = Kind::Single;
  double n_bar = 0.0;  // mean photon number, coherent only

  static FockSource single() { return {Kind::Single, 0.0}; }
  static FockSource coherent(double n_bar) { return {Kind::Coherent, n_bar}; }
};

struct FockOracleInput {
  FockSource input_a;
  FockSource input_b;
  double overlap = 1.0;  // mode-overlap amplitude in [0, 1]
  int n_max = 4;         // coherent-state truncation

  void validate() const {
    if (!(overlap >= 0.0 && overlap <= 1.0))
      throw std::domain_error("overlap must be in [0, 1]");
    if (n_max < 2) throw std::domain_error("n_max must be >= 2");
  }
};

struct FockOracleResult {
  double p_coincidence = 0.0;      // >=1 photon in each output port
  double p_bunch_a = 0.0;          // >=2 photons, all in port a's output
  double p_bunch_b = 0.0;          // >=2 photons, all in port b's output
  double p_vacuum_or_single = 0.0; // <=1 photon total
};

namespace detail {

inline std::vector<double> photon_number_distribution(const FockSource& src,
                                                      int n_max) {
  if (src.kind == FockSource::Kind::Single) return {0.0, 1.0};
  if (!(src.n_bar >= 0.0)) throw std::domain_error("n_bar must be >= 0");
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1);
  double total = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    p[static_cast<std::size_t>(n)] =
        std::exp(-src.n_bar) * std::pow(src.n_bar, n) / factorial_d(n);
    total += p[static_cast<std::size_t>(n)];
  }
  if (1.0 - total >= 1e-6)
    throw std::invalid_argument(
        "coherent-state truncation tail exceeds 1e-6; raise n_max");
  for (auto& v : p) v /= total;  // renormalize the truncated mixture
  return p;
}

}  // namespace detail

/// Brute-force reference for WCS/Fock interference at a 50:50 beamsplitter.
/// Coherent inputs are treated as phase-averaged, i.e. as Poissonian
/// mixtures of Fock states (only the relative phase could matter, and it is
/// uniformly random between independent sources).
inline FockOracleResult fock_hom_oracle(const FockOracleInput& input) {
  input.validate();
  const auto pa = detail::photon_number_distribution(input.input_a, input.n_max);
  const auto pb = detail::photon_number_distribution(input.input_b, input.n_max);

  FockOracleResult r;
  for (int na = 0; na < static_cast<int>(pa.size()); ++na) {
    for (int nb = 0; nb < static_cast<int>(pb.size()); ++nb) {
      const double w = pa[static_cast<std::size_t>(na)] *
                       pb[static_cast<std::size_t>(nb)];
      if (w == 0.0) continue;
      if (na + nb <= 1) {
        r.p_vacuum_or_single += w;
        continue;
      }
      for (const auto& [ports, q] :
           beamsplitter_output_distribution(na, nb, input.overlap)) {
        const auto [nc, nd] = ports;
        if (nc >= 1 && nd >= 1)
          r.p_coincidence += w * q;
        else if (nc >= 2)
          r.p_bunch_a += w * q;
        else if (nd >= 2)
          r.p_bunch_b += w * q;
        else
          r.p_vacuum_or_single += w * q;
      }
    }
  }
  return r;
}

/// Dip visibility as the oracle sees it: coincidence suppression of the
/// given configuration relative to the fully distinguishable case.
inline double oracle_dip_visibility(const FockOracleInput& input) {
  FockOracleInput dist = input;
  dist.overlap = 0.0;
  const double p0 = fock_hom_oracle(dist).p_coincidence;
  if (p0 <= 0.0) throw std::domain_error("no coincidences in distinguishable case");
  return (p0 - fock_hom_oracle(input).p_coincidence) / p0;
}

}  // namespace homsim
