#pragma once

// JSON serialization of certificates, reports and run manifests. Every
// document carries schema_version; non-finite numbers are encoded as the
// strings "infinity" / "-infinity" / "nan".

#include <string>
#include <vector>

#include "json.hpp"
#include "nds/contraction.hpp"
#include "nds/ensemble.hpp"
#include "nds/robustness.hpp"
#include "nds/spreduce.hpp"

namespace nds {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const Box& box);
Json to_json(const CertifyResult& result);
Json to_json(const GainConstants& gc);
Json to_json(const SPReport& report);
Json to_json(const VerificationReport& report);
Json to_json(const std::vector<Cluster>& clusters);

/// Encodes a double, mapping non-finite values to strings.
Json encode_number(double v);

GainConstants gain_constants_from_json(const Json& j);
GainConstants load_gain_constants(const std::string& path);

/// FNV-1a 64-bit content hash, hex encoded.
std::string file_hash_hex(const std::string& path);

struct RunManifest {
  std::string command;
  std::string input_path;  // empty for built-in case studies
  std::string input_hash;
  std::uint64_t seed = 0;
  Json config;
  std::vector<std::string> outputs;
};

Json to_json(const RunManifest& manifest);
void write_manifest(const std::string& directory, const RunManifest& manifest);

}  // namespace nds
