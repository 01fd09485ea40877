#include "nds/json_io.hpp"

#include <cmath>
#include <fstream>

#include "nds/version.hpp"

namespace nds {

Json encode_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "infinity" : "-infinity";
  return v;
}

namespace {

double decode_number(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s == "infinity") return std::numeric_limits<double>::infinity();
    if (s == "-infinity") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw NumericError(std::string("bad numeric field '") + key + "': " + s);
  }
  return v.get<double>();
}

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(encode_number(v[i]));
  return a;
}

}  // namespace

Json to_json(const Box& box) {
  Json a = Json::array();
  for (int i = 0; i < box.dim(); ++i) {
    Json d;
    if (static_cast<int>(box.labels.size()) > i && !box.labels[i].empty())
      d["state"] = box.labels[i];
    d["lo"] = box.lo[i];
    d["hi"] = box.hi[i];
    a.push_back(std::move(d));
  }
  return a;
}

Json to_json(const CertifyResult& result) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "contraction_certificate";
  j["contracting"] = result.contracting;
  const ContractionCertificate& c = result.certificate;
  j["beta"] = encode_number(result.contracting ? c.beta : 0.0);
  j["chi"] = encode_number(c.chi);
  j["samples"] = c.samples;
  j["metric"] = c.metric_desc;
  j["time_span"] = c.time_span;
  j["domain"] = to_json(c.domain);
  j["worst_point"] = vec_to_json(c.worst_point);
  j["worst_eig"] = encode_number(c.worst_eig);
  if (!result.contracting && result.violation.has_value()) {
    j["violation"] = {{"point", vec_to_json(result.violation->point)},
                      {"lambda_max", encode_number(result.violation->lambda_max)}};
  }
  return j;
}

Json to_json(const GainConstants& gc) {
  Json j;
  j["d_f"] = encode_number(gc.d_f);
  j["alpha_f_x"] = encode_number(gc.a_fx);
  j["alpha_f_y"] = encode_number(gc.a_fy);
  j["d_g"] = encode_number(gc.d_g);
  j["alpha_g_x"] = encode_number(gc.a_gx);
  j["chi_f"] = encode_number(gc.chi_f);
  j["beta_f"] = encode_number(gc.beta_f);
  j["chi_g"] = encode_number(gc.chi_g);
  j["beta_g"] = encode_number(gc.beta_g);
  j["m_bar"] = encode_number(gc.m_bar);
  j["delta_offset"] = encode_number(gc.delta_offset);
  return j;
}

Json to_json(const SPReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "sp_report";
  j["epsilon"] = encode_number(r.epsilon);
  j["epsilon_c"] = encode_number(r.epsilon_c);
  j["margin"] = encode_number(r.margin);
  j["bounds_valid"] = r.bounds_valid;
  j["m_xtilde_bound"] = encode_number(r.m_xtilde);
  j["ytilde_asymptote"] = encode_number(r.ytilde_asymptote);
  j["t_fast"] = encode_number(r.t_fast);
  j["t_total"] = encode_number(r.t_total);
  j["xt0_norm"] = encode_number(r.xt0_norm);
  j["constants"] = to_json(r.constants);
  j["constants_source"] = r.constants_source;
  j["constants_verified"] = r.constants_verified;
  j["constants_margin"] = encode_number(r.constants_margin);
  j["superlinear_warning"] = r.superlinear_warning;
  j["has_inputs"] = r.has_inputs;
  j["samples"] = r.samples;
  return j;
}

Json to_json(const VerificationReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "verification_report";
  const char* status = nullptr;
  switch (r.status) {
    case VerificationReport::Status::Pass: status = "PASS"; break;
    case VerificationReport::Status::Fail: status = "FAIL"; break;
    case VerificationReport::Status::Inconclusive: status = "INCONCLUSIVE"; break;
    case VerificationReport::Status::SmallGainViolated: status = "SMALL_GAIN_VIOLATED"; break;
  }
  j["status"] = status;
  j["max_ratio"] = encode_number(r.max_ratio);
  j["at_time"] = encode_number(r.at_time);
  j["points"] = r.points;
  j["tolerance"] = r.tolerance;
  if (r.status == VerificationReport::Status::Inconclusive)
    j["exit_time"] = encode_number(r.exit_time);
  if (r.status == VerificationReport::Status::SmallGainViolated)
    j["small_gain_margin"] = encode_number(r.small_gain_margin);
  j["bound"] = {{"chi", encode_number(r.bound.chi)},
                {"r0", encode_number(r.bound.r0)},
                {"rate", encode_number(r.bound.rate)},
                {"asymptote", encode_number(r.bound.asymptote())}};
  return j;
}

Json to_json(const std::vector<Cluster>& clusters) {
  Json a = Json::array();
  for (const auto& c : clusters)
    a.push_back({{"center", vec_to_json(c.representative)}, {"count", c.count}});
  return a;
}

GainConstants gain_constants_from_json(const Json& j) {
  GainConstants gc;
  gc.d_f = decode_number(j, "d_f");
  gc.a_fx = decode_number(j, "alpha_f_x");
  gc.a_fy = decode_number(j, "alpha_f_y");
  gc.d_g = decode_number(j, "d_g");
  gc.a_gx = decode_number(j, "alpha_g_x");
  gc.chi_f = decode_number(j, "chi_f");
  gc.beta_f = decode_number(j, "beta_f");
  gc.chi_g = decode_number(j, "chi_g");
  gc.beta_g = decode_number(j, "beta_g");
  if (j.contains("m_bar")) gc.m_bar = decode_number(j, "m_bar");
  if (j.contains("delta_offset")) gc.delta_offset = decode_number(j, "delta_offset");
  return gc;
}

GainConstants load_gain_constants(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NumericError("cannot open gains file: " + path);
  Json j = Json::parse(in);
  return gain_constants_from_json(j);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericError("cannot open file for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in) {
    in.read(buf, sizeof buf);
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

Json to_json(const RunManifest& m) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "run_manifest";
  j["tool"] = "nds";
  j["version"] = kVersion;
  j["command"] = m.command;
  if (!m.input_path.empty()) {
    j["input"] = m.input_path;
    j["input_hash"] = m.input_hash;
  }
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["outputs"] = m.outputs;
  return j;
}

void write_manifest(const std::string& directory, const RunManifest& manifest) {
  std::ofstream out(directory + "/manifest.json");
  if (!out) throw NumericError("cannot write manifest in " + directory);
  out << to_json(manifest).dump(2) << "\n";
}

}  // namespace nds
