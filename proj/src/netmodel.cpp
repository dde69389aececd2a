#include "hemvsa/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hemvsa/error.hpp"

namespace hemvsa {

using json = nlohmann::json;

const char* to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Slack: return "slack";
    case BusKind::PV: return "pv";
    case BusKind::PQ: return "pq";
  }
  return "?";
}

Eigen::MatrixXcd build_admittance(const std::vector<Bus>& buses,
                                  const std::vector<Branch>& branches,
                                  const std::map<int, std::size_t>& index_of) {
  const auto n = static_cast<Eigen::Index>(buses.size());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& br : branches) {
    const auto f = static_cast<Eigen::Index>(index_of.at(br.from));
    const auto t = static_cast<Eigen::Index>(index_of.at(br.to));
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex half_charging(0.0, br.b_sh / 2.0);
    y(f, t) -= ys;
    y(t, f) -= ys;
    y(f, f) += ys + half_charging;
    y(t, t) += ys + half_charging;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = buses[static_cast<std::size_t>(i)];
    y(i, i) += Complex(b.g_sh, b.b_sh);
  }
  return y;
}

namespace {

bool shares_ok(double z, double i, double p) {
  return z >= 0 && i >= 0 && p >= 0 && std::abs(z + i + p - 1.0) <= 1e-12;
}

std::vector<std::string> validate(const std::vector<Bus>& buses,
                                  const std::vector<Branch>& branches,
                                  double base_mva, bool require_slack) {
  std::vector<std::string> problems;
  auto bad = [&](std::string msg) { problems.push_back(std::move(msg)); };

  if (!(base_mva > 0)) bad("base_mva must be positive");
  if (buses.empty()) bad("network has no buses");

  std::set<int> ids;
  std::size_t slack = 0;
  for (const auto& b : buses) {
    const std::string tag = "bus " + std::to_string(b.id);
    if (!ids.insert(b.id).second) bad(tag + ": duplicate id");
    if (b.kind == BusKind::Slack) {
      ++slack;
      if (!(std::abs(b.v_slack) > 0)) bad(tag + ": slack voltage must be nonzero");
    }
    if (b.kind == BusKind::PV && !(b.v_sp > 0)) bad(tag + ": v_sp must be positive");
    if (b.zip) {
      if (b.kind != BusKind::PQ) bad(tag + ": zip shares allowed on PQ buses only");
      const auto& z = *b.zip;
      if (!shares_ok(z.p_z, z.p_i, z.p_p)) bad(tag + ": active zip shares must be >= 0 and sum to 1");
      if (!shares_ok(z.q_z, z.q_i, z.q_p)) bad(tag + ": reactive zip shares must be >= 0 and sum to 1");
    }
    if (b.alpha < 0) bad(tag + ": alpha must be >= 0");
    if (b.alpha != 0 && b.kind != BusKind::PV) bad(tag + ": alpha allowed on PV buses only");
    for (double v : {b.p_load, b.q_load, b.p_gen, b.alpha, b.g_sh, b.b_sh, b.v_sp,
                     b.v_slack.real(), b.v_slack.imag()}) {
      if (!std::isfinite(v)) {
        bad(tag + ": non-finite field");
        break;
      }
    }
  }
  if (require_slack && slack == 0) bad("network has no slack bus");

  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& br = branches[k];
    const std::string tag = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
    if (!ids.count(br.from)) bad(tag + ": unknown from-bus " + std::to_string(br.from));
    if (!ids.count(br.to)) bad(tag + ": unknown to-bus " + std::to_string(br.to));
    if (br.from == br.to) bad(tag + ": from and to are the same bus");
    if (br.r == 0.0 && br.x == 0.0) bad(tag + ": zero series impedance");
    if (!std::isfinite(br.r) || !std::isfinite(br.x) || !std::isfinite(br.b_sh))
      bad(tag + ": non-finite impedance");
  }

  // Connectivity over branches whose endpoints exist.
  if (!buses.empty()) {
    std::map<int, std::vector<int>> adj;
    for (const auto& br : branches) {
      if (!ids.count(br.from) || !ids.count(br.to)) continue;
      adj[br.from].push_back(br.to);
      adj[br.to].push_back(br.from);
    }
    std::set<int> seen{buses.front().id};
    std::vector<int> stack{buses.front().id};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (seen.insert(v).second) stack.push_back(v);
    }
    if (seen.size() != ids.size()) bad("network is not connected");
  }
  return problems;
}

}  // namespace

Network::Network(std::string name, double base_mva, std::vector<Bus> buses,
                 std::vector<Branch> branches, bool require_slack)
    : name_(std::move(name)),
      base_mva_(base_mva),
      buses_(std::move(buses)),
      branches_(std::move(branches)),
      require_slack_(require_slack) {
  auto problems = validate(buses_, branches_, base_mva_, require_slack_);
  if (!problems.empty()) throw ValidationError(std::move(problems));
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    index_[buses_[i].id] = i;
    switch (buses_[i].kind) {
      case BusKind::Slack: ++n_slack_; break;
      case BusKind::PV: ++n_pv_; break;
      case BusKind::PQ: ++n_pq_; break;
    }
  }
  y_ = build_admittance(buses_, branches_, index_);
}

std::size_t Network::index_of(int bus_id) const {
  auto it = index_.find(bus_id);
  if (it == index_.end()) throw std::out_of_range("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

double Network::area_active_load() const {
  double total = 0.0;
  for (const auto& b : buses_)
    if (b.kind == BusKind::PQ) total += b.p_load;
  return total;
}

Network Network::with_loads(const std::map<int, Complex>& loads) const {
  auto buses = buses_;
  for (const auto& [id, s] : loads) {
    auto& b = buses.at(index_of(id));
    if (b.kind != BusKind::PQ)
      throw std::invalid_argument("load override on non-PQ bus " + std::to_string(id));
    b.p_load = s.real();
    b.q_load = s.imag();
  }
  return Network(name_, base_mva_, std::move(buses), branches_, require_slack_);
}

// ---------------------------------------------------------------------------
// Case file I/O

namespace {

std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  template <typename T>
  T get(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.contains(key)) fail(path + "." + key, "missing required field");
    return as<T>(obj.at(key), path + "." + key);
  }

  template <typename T>
  std::optional<T> opt(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return as<T>(obj.at(key), path + "." + key);
  }

  template <typename T>
  T as(const json& v, const std::string& path) const {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) fail(path, "expected a number");
    } else if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) fail(path, "expected an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(path, "expected a string");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path, "expected a boolean");
    }
    return v.get<T>();
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ParseError(source_ + ": " + path, what);
  }

 private:
  std::string source_;
};

BusKind parse_kind(const std::string& s, const Reader& rd, const std::string& path) {
  std::string k = s;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "slack" || k == "sl") return BusKind::Slack;
  if (k == "pv") return BusKind::PV;
  if (k == "pq") return BusKind::PQ;
  rd.fail(path, "unknown bus kind '" + s + "'");
}

ZipShares parse_zip(const json& z, const Reader& rd, const std::string& path) {
  auto triple = [&](const char* key) {
    if (!z.contains(key) || !z.at(key).is_array() || z.at(key).size() != 3)
      rd.fail(path + "." + key, "expected [z, i, p] array of 3 numbers");
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i)
      out[i] = rd.as<double>(z.at(key).at(i), path + "." + key + "[" + std::to_string(i) + "]");
    return out;
  };
  const auto p = triple("p");
  const auto q = triple("q");
  return ZipShares{p[0], p[1], p[2], q[0], q[1], q[2]};
}

// Reads `<stem>_pu` or, failing that, `<mw_key>` divided by base.
double power_field(const json& obj, const std::string& pu_key, const std::string& mw_key,
                   double base, const Reader& rd, const std::string& path) {
  if (auto v = rd.opt<double>(obj, pu_key, path)) return *v;
  if (auto v = rd.opt<double>(obj, mw_key, path)) return *v / base;
  return 0.0;
}

}  // namespace

Network parse_case_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + line_context(text, e.byte), e.what());
  }
  Reader rd(source);
  if (!doc.is_object()) rd.fail("$", "top level must be an object");
  const auto schema = rd.get<std::string>(doc, "schema", "$");
  if (schema != kCaseSchema) rd.fail("$.schema", "unsupported schema '" + schema + "'");
  const auto name = rd.opt<std::string>(doc, "name", "$").value_or("unnamed");
  const double base = rd.get<double>(doc, "base_mva", "$");
  if (!(base > 0)) rd.fail("$.base_mva", "must be positive");
  const bool is_area = rd.opt<bool>(doc, "area", "$").value_or(false);

  if (!doc.contains("buses") || !doc.at("buses").is_array()) rd.fail("$.buses", "expected an array");
  std::vector<Bus> buses;
  for (std::size_t k = 0; k < doc.at("buses").size(); ++k) {
    const auto& jb = doc.at("buses").at(k);
    const std::string path = "$.buses[" + std::to_string(k) + "]";
    if (!jb.is_object()) rd.fail(path, "expected an object");
    Bus b;
    b.id = rd.get<int>(jb, "id", path);
    b.kind = parse_kind(rd.get<std::string>(jb, "kind", path), rd, path + ".kind");
    b.p_load = power_field(jb, "p_load_pu", "p_load_mw", base, rd, path);
    b.q_load = power_field(jb, "q_load_pu", "q_load_mvar", base, rd, path);
    b.g_sh = rd.opt<double>(jb, "g_sh_pu", path).value_or(0.0);
    b.b_sh = rd.opt<double>(jb, "b_sh_pu", path).value_or(0.0);
    switch (b.kind) {
      case BusKind::Slack: {
        if (auto re = rd.opt<double>(jb, "v_slack_re", path)) {
          b.v_slack = {*re, rd.get<double>(jb, "v_slack_im", path)};
        } else {
          const double mag = rd.get<double>(jb, "v_slack_mag", path);
          const double ang = rd.opt<double>(jb, "v_slack_ang_deg", path).value_or(0.0);
          b.v_slack = std::polar(mag, ang * std::numbers::pi / 180.0);
        }
        b.v_sp = std::abs(b.v_slack);
        break;
      }
      case BusKind::PV:
        b.v_sp = rd.get<double>(jb, "v_sp", path);
        b.p_gen = power_field(jb, "p_gen_pu", "p_gen_mw", base, rd, path);
        b.alpha = rd.opt<double>(jb, "alpha", path).value_or(0.0);
        break;
      case BusKind::PQ:
        if (jb.contains("zip")) b.zip = parse_zip(jb.at("zip"), rd, path + ".zip");
        if (jb.contains("alpha")) b.alpha = rd.get<double>(jb, "alpha", path);
        break;
    }
    buses.push_back(b);
  }

  if (!doc.contains("branches") || !doc.at("branches").is_array())
    rd.fail("$.branches", "expected an array");
  std::vector<Branch> branches;
  for (std::size_t k = 0; k < doc.at("branches").size(); ++k) {
    const auto& jr = doc.at("branches").at(k);
    const std::string path = "$.branches[" + std::to_string(k) + "]";
    if (!jr.is_object()) rd.fail(path, "expected an object");
    Branch br;
    br.from = rd.get<int>(jr, "from", path);
    br.to = rd.get<int>(jr, "to", path);
    br.r = rd.get<double>(jr, "r_pu", path);
    br.x = rd.get<double>(jr, "x_pu", path);
    br.b_sh = rd.opt<double>(jr, "b_sh_pu", path).value_or(0.0);
    branches.push_back(br);
  }
  return Network(name, base, std::move(buses), std::move(branches), !is_area);
}

Network parse_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case_text(ss.str(), path);
}

std::string write_case(const Network& network) {
  json doc;
  doc["schema"] = kCaseSchema;
  doc["name"] = network.name();
  doc["base_mva"] = network.base_mva();
  if (network.n_slack() == 0) doc["area"] = true;
  doc["buses"] = json::array();
  for (const auto& b : network.buses()) {
    json jb;
    jb["id"] = b.id;
    jb["kind"] = to_string(b.kind);
    jb["p_load_pu"] = b.p_load;
    jb["q_load_pu"] = b.q_load;
    if (b.g_sh != 0.0) jb["g_sh_pu"] = b.g_sh;
    if (b.b_sh != 0.0) jb["b_sh_pu"] = b.b_sh;
    switch (b.kind) {
      case BusKind::Slack:
        jb["v_slack_re"] = b.v_slack.real();
        jb["v_slack_im"] = b.v_slack.imag();
        break;
      case BusKind::PV:
        jb["v_sp"] = b.v_sp;
        jb["p_gen_pu"] = b.p_gen;
        jb["alpha"] = b.alpha;
        break;
      case BusKind::PQ:
        if (b.zip) {
          const auto& z = *b.zip;
          jb["zip"] = {{"p", {z.p_z, z.p_i, z.p_p}}, {"q", {z.q_z, z.q_i, z.q_p}}};
        }
        break;
    }
    doc["buses"].push_back(jb);
  }
  doc["branches"] = json::array();
  for (const auto& br : network.branches())
    doc["branches"].push_back(
        {{"from", br.from}, {"to", br.to}, {"r_pu", br.r}, {"x_pu", br.x}, {"b_sh_pu", br.b_sh}});
  return doc.dump(2) + "\n";
}

std::string resolve_case_path(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  if (fs::exists(name_or_path)) return name_or_path;
  if (name_or_path.find('/') == std::string::npos) {
    const fs::path bundled = fs::path(HEMVSA_DATA_DIR) / (name_or_path + ".json");
    if (fs::exists(bundled)) return bundled.string();
  }
  return name_or_path;
}

// ---------------------------------------------------------------------------
// Mismatch

Complex load_at(const Bus& bus, double v_mag) {
  const ZipShares z = bus.zip.value_or(ZipShares::constant_power());
  const double v2 = v_mag * v_mag;
  return {bus.p_load * (z.p_z * v2 + z.p_i * v_mag + z.p_p),
          bus.q_load * (z.q_z * v2 + z.q_i * v_mag + z.q_p)};
}

Complex bus_residual(const Network& network, std::span<const Complex> v, double s,
                     std::span<const double> q_pv, std::size_t i) {
  const auto& y = network.y();
  Complex current{0.0, 0.0};
  for (std::size_t k = 0; k < network.size(); ++k)
    current += y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * v[k];
  const Bus& b = network.bus(i);
  switch (b.kind) {
    case BusKind::Slack:
      return {0.0, 0.0};
    case BusKind::PQ: {
      const Complex injection = -s * load_at(b, std::abs(v[i]));
      return current - std::conj(injection) / std::conj(v[i]);
    }
    case BusKind::PV: {
      const double p = b.p_gen - b.p_load + s * b.alpha * network.area_active_load();
      const Complex injection(p, q_pv[i]);
      return current - std::conj(injection) / std::conj(v[i]);
    }
  }
  return {0.0, 0.0};
}

double pf_mismatch(const Network& network, std::span<const Complex> v, double s,
                   std::span<const double> q_pv) {
  double worst = 0.0;
  for (std::size_t i = 0; i < network.size(); ++i) {
    if (network.bus(i).kind == BusKind::Slack) continue;
    const double r = std::abs(bus_residual(network, v, s, q_pv, i));
    if (std::isnan(r)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, r);
  }
  return worst;
}

double pq_mismatch(const Network& network, std::span<const Complex> v, double s) {
  double worst = 0.0;
  const std::vector<double> no_q(network.size(), 0.0);
  for (std::size_t i = 0; i < network.size(); ++i) {
    if (network.bus(i).kind != BusKind::PQ) continue;
    const double r = std::abs(bus_residual(network, v, s, no_q, i));
    if (std::isnan(r)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace hemvsa
