#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hemvsa {

using Complex = std::complex<double>;

enum class BusKind { Slack, PV, PQ };

const char* to_string(BusKind kind);

/// Fractions of constant-impedance, constant-current and constant-power load
/// for active (p_*) and reactive (q_*) parts. Each triple sums to one.
struct ZipShares {
  double p_z = 0.0, p_i = 0.0, p_p = 1.0;
  double q_z = 0.0, q_i = 0.0, q_p = 1.0;

  static ZipShares constant_power() { return {}; }
  bool operator==(const ZipShares&) const = default;
};

struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double v_sp = 1.0;               // PV only
  Complex v_slack{1.0, 0.0};       // Slack only
  double p_load = 0.0;             // nominal P_i0, pu
  double q_load = 0.0;             // nominal Q_i0, pu
  double p_gen = 0.0;              // PV only
  double alpha = 0.0;              // PV regulation factor
  std::optional<ZipShares> zip;    // PQ only; absent means constant power
  double g_sh = 0.0;               // bus shunt, pu
  double b_sh = 0.0;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_sh = 0.0;  // total line charging, split half per end

  bool operator==(const Branch&) const = default;
};

/// Complex admittance matrix for buses/branches in the given order.
/// `index_of` maps bus id to row.
Eigen::MatrixXcd build_admittance(const std::vector<Bus>& buses,
                                  const std::vector<Branch>& branches,
                                  const std::map<int, std::size_t>& index_of);

/// Immutable, validated power network. Bus ordering is the order given at
/// construction and is used by every vector and matrix in the library.
class Network {
 public:
  /// Throws ValidationError listing every violated invariant.
  /// `require_slack` is false only for load-area files that get their
  /// source from an attached external equivalent.
  Network(std::string name, double base_mva, std::vector<Bus> buses,
          std::vector<Branch> branches, bool require_slack = true);

  const std::string& name() const { return name_; }
  double base_mva() const { return base_mva_; }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Bus& bus(std::size_t index) const { return buses_[index]; }
  std::size_t size() const { return buses_.size(); }
  const Eigen::MatrixXcd& y() const { return y_; }

  std::size_t index_of(int bus_id) const;
  bool contains(int bus_id) const { return index_.count(bus_id) != 0; }

  std::size_t n_slack() const { return n_slack_; }
  std::size_t n_pq() const { return n_pq_; }
  std::size_t n_pv() const { return n_pv_; }

  /// Sum of nominal active load over PQ buses: the quantity scaled by s.
  double area_active_load() const;

  /// Copy with PQ-bus nominal loads replaced (id -> P + jQ, pu).
  Network with_loads(const std::map<int, Complex>& loads) const;

  bool operator==(const Network& other) const {
    return name_ == other.name_ && base_mva_ == other.base_mva_ &&
           buses_ == other.buses_ && branches_ == other.branches_;
  }

 private:
  std::string name_;
  double base_mva_;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::map<int, std::size_t> index_;
  Eigen::MatrixXcd y_;
  std::size_t n_slack_ = 0, n_pq_ = 0, n_pv_ = 0;
  bool require_slack_;
};

// Case files --------------------------------------------------------------

inline constexpr const char* kCaseSchema = "hemvsa-case/1";

/// Parses a JSON case file. MW/MVar columns are normalized by base_mva.
/// Throws ParseError (with line/field context) or ValidationError.
Network parse_case(const std::string& path);
Network parse_case_text(const std::string& text, const std::string& source);

/// Inverse of parse_case_text: `parse_case_text(write_case(n)) == n`.
std::string write_case(const Network& network);

/// Resolves "case4_ab" style names to the bundled fixture directory;
/// anything that looks like a path is returned unchanged.
std::string resolve_case_path(const std::string& name_or_path);

// Mismatch ----------------------------------------------------------------

/// Complex load drawn at a PQ bus at loading s = 1 given |V| (ZIP aware).
Complex load_at(const Bus& bus, double v_mag);

/// Current-balance residual of bus `i`: sum_k Y_ik V_k - I_inj,i(s).
/// `q_pv` is indexed by bus and read only at PV buses.
Complex bus_residual(const Network& network, std::span<const Complex> v,
                     double s, std::span<const double> q_pv, std::size_t i);

/// Max residual over all non-slack buses.
double pf_mismatch(const Network& network, std::span<const Complex> v,
                   double s, std::span<const double> q_pv);

/// Max residual over PQ buses only (the continuation error measure).
double pq_mismatch(const Network& network, std::span<const Complex> v,
                   double s);

}  // namespace hemvsa
