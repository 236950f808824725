#include "zoterag/config.hpp"

#include <cstdlib>

#include "zoterag/error.hpp"

namespace zoterag {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kInvalidParams, key + " " + what);
}

std::size_t get_count(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer()) {
    if (v.get<long long>() < 0) bad(key, "must not be negative");
    return static_cast<std::size_t>(v.get<long long>());
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0 && d == static_cast<double>(static_cast<std::size_t>(d))) {
      return static_cast<std::size_t>(d);
    }
  }
  bad(key, "must be a non-negative integer");
}

double get_real(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) bad(key, "must be a number");
  return v.get<double>();
}

std::string get_text(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return v.dump();
  bad(key, "must be a string");
}

bool get_flag(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_boolean()) bad(key, "must be a boolean");
  return v.get<bool>();
}

// Secrets echoed back as "***" keep their current value.
void patch_secret(const json& j, const std::string& key, std::string& target) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  const std::string v = get_text(j, key);
  if (v != kRedacted) target = v;
}

template <typename Fn>
auto checked(const std::string& key, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidParams) throw;
    throw Error(ErrorCode::kInvalidParams, key + ": " + e.what());
  }
}

std::string redact_value(const std::string& secret) {
  return secret.empty() ? std::string() : std::string(kRedacted);
}

const json& section(const json& patch, const char* name) {
  static const json kEmpty = json::object();
  if (!patch.contains(name)) return kEmpty;
  const json& s = patch.at(name);
  if (!s.is_object()) bad(name, "must be an object");
  return s;
}

// Top-level shorthand keys, mirroring the command-line flags.
json lift_flat_keys(const json& patch) {
  json out = patch;
  auto move = [&](const char* flat, const char* sec, const char* key) {
    if (!patch.contains(flat)) return;
    if (!out.contains(sec)) out[sec] = json::object();
    if (!out[sec].is_object()) bad(sec, "must be an object");
    if (!out[sec].contains(key)) out[sec][key] = patch.at(flat);
  };
  move("library_type", "library", "library_type");
  move("library_id", "library", "library_id");
  move("chunk_size", "chunking", "chunk_size");
  move("chunk_overlap", "chunking", "chunk_overlap");
  move("search_type", "retrieval", "search_type");
  move("k", "retrieval", "k");
  move("fetch_k", "retrieval", "fetch_k");
  move("mmr_lambda", "retrieval", "mmr_lambda");
  move("score_threshold", "retrieval", "score_threshold");
  move("model", "generation", "model");
  move("max_tokens", "generation", "max_tokens");
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.embedder.provider = EmbedderProvider::kRemote;
  cfg.embedder.dim = EmbedderConfig::kRemoteDim;
  cfg.generation.provider = GenProvider::kRemote;
  return cfg;
}

void PipelineConfig::validate() const {
  chunking.validate();
  retrieval.validate();
  if (embedder.dim == 0) bad("embedder.dim", "must be positive");
  if (embedder.provider == EmbedderProvider::kLocalHash && embedder.dim < 2) {
    bad("embedder.dim", "must be >= 2 for local_hash");
  }
  if (generation.max_tokens < 1) bad("generation.max_tokens", "must be >= 1");
  if (generation.model_id.empty()) bad("generation.model", "must not be empty");
  if (!library.library_id.empty()) library.validate();
}

json PipelineConfig::to_json() const {
  const auto& c = retrieval.compression;
  return {
      {"library",
       {{"library_type", std::string(zoterag::to_string(library.library_type))},
        {"library_id", library.library_id},
        {"api_key", redact_value(library.api_key)}}},
      {"chunking",
       {{"chunk_size", chunking.chunk_size},
        {"chunk_overlap", chunking.chunk_overlap}}},
      {"embedder",
       {{"provider", std::string(zoterag::to_string(embedder.provider))},
        {"model_id", embedder.model_id},
        {"base_url", embedder.base_url},
        {"api_key", redact_value(embedder.api_key)},
        {"dim", embedder.dim}}},
      {"retrieval",
       {{"search_type", std::string(zoterag::to_string(retrieval.search_type))},
        {"k", retrieval.k},
        {"fetch_k", retrieval.fetch_k},
        {"mmr_lambda", retrieval.lambda},
        {"score_threshold", retrieval.score_threshold},
        {"compression",
         {{"enabled", c.enabled},
          {"min_query_similarity", c.min_query_similarity},
          {"redundancy_ceiling", c.redundancy_ceiling}}}}},
      {"generation",
       {{"provider", std::string(zoterag::to_string(generation.provider))},
        {"model", generation.model_id},
        {"max_tokens", generation.max_tokens},
        {"base_url", generation.base_url},
        {"api_key", redact_value(generation.api_key)}}},
      {"data_dir", data_dir.string()}};
}

RetrievalConfig patched_retrieval(const RetrievalConfig& base, const json& r) {
  RetrievalConfig out = base;
  if (!r.is_object()) bad("retrieval", "must be an object");
  if (r.contains("search_type")) {
    out.search_type = checked("search_type", [&] {
      return search_type_from_string(get_text(r, "search_type"));
    });
  }
  if (r.contains("k")) {
    out.k = get_count(r, "k");
    if (!r.contains("fetch_k") && out.fetch_k < out.k) out.fetch_k = out.k;
  }
  if (r.contains("fetch_k")) out.fetch_k = get_count(r, "fetch_k");
  if (r.contains("mmr_lambda")) out.lambda = get_real(r, "mmr_lambda");
  if (r.contains("lambda")) out.lambda = get_real(r, "lambda");
  if (r.contains("score_threshold")) out.score_threshold = get_real(r, "score_threshold");
  if (r.contains("compression")) {
    const json& c = r.at("compression");
    if (!c.is_object()) bad("compression", "must be an object");
    if (c.contains("enabled")) out.compression.enabled = get_flag(c, "enabled");
    if (c.contains("min_query_similarity")) {
      out.compression.min_query_similarity = get_real(c, "min_query_similarity");
    }
    if (c.contains("redundancy_ceiling")) {
      out.compression.redundancy_ceiling = get_real(c, "redundancy_ceiling");
    }
  }
  out.validate();
  return out;
}

GenConfig patched_generation(const GenConfig& base, const json& g) {
  GenConfig out = base;
  if (!g.is_object()) bad("generation", "must be an object");
  if (g.contains("provider")) {
    out.provider = checked("provider", [&] {
      return gen_provider_from_string(get_text(g, "provider"));
    });
  }
  if (g.contains("model")) out.model_id = get_text(g, "model");
  if (g.contains("model_id")) out.model_id = get_text(g, "model_id");
  if (g.contains("max_tokens")) out.max_tokens = get_count(g, "max_tokens");
  if (g.contains("base_url")) out.base_url = get_text(g, "base_url");
  if (g.contains("script_path")) out.script_path = get_text(g, "script_path");
  patch_secret(g, "api_key", out.api_key);
  if (out.max_tokens < 1) bad("max_tokens", "must be >= 1");
  if (out.model_id.empty()) bad("model", "must not be empty");
  return out;
}

PipelineConfig PipelineConfig::patched(const json& raw) const {
  if (!raw.is_object()) bad("config", "must be a JSON object");
  const json patch = lift_flat_keys(raw);
  PipelineConfig out = *this;

  const json& lib = section(patch, "library");
  if (lib.contains("library_type")) {
    out.library.library_type = checked("library_type", [&] {
      return library_type_from_string(get_text(lib, "library_type"));
    });
  }
  if (lib.contains("library_id")) out.library.library_id = get_text(lib, "library_id");
  patch_secret(lib, "api_key", out.library.api_key);

  const json& ch = section(patch, "chunking");
  if (ch.contains("chunk_size")) out.chunking.chunk_size = get_count(ch, "chunk_size");
  if (ch.contains("chunk_overlap")) {
    out.chunking.chunk_overlap = get_count(ch, "chunk_overlap");
  }

  const json& em = section(patch, "embedder");
  if (em.contains("provider")) {
    const auto p = checked("provider", [&] {
      return embedder_provider_from_string(get_text(em, "provider"));
    });
    if (p != out.embedder.provider && !em.contains("dim")) {
      out.embedder.dim = p == EmbedderProvider::kRemote ? EmbedderConfig::kRemoteDim
                                                        : EmbedderConfig::kLocalDim;
    }
    out.embedder.provider = p;
  }
  if (em.contains("model_id")) out.embedder.model_id = get_text(em, "model_id");
  if (em.contains("base_url")) out.embedder.base_url = get_text(em, "base_url");
  if (em.contains("dim")) out.embedder.dim = get_count(em, "dim");
  patch_secret(em, "api_key", out.embedder.api_key);

  if (patch.contains("retrieval")) {
    out.retrieval = patched_retrieval(out.retrieval, patch.at("retrieval"));
  }
  if (patch.contains("generation")) {
    out.generation = patched_generation(out.generation, patch.at("generation"));
  }
  if (patch.contains("data_dir")) out.data_dir = get_text(patch, "data_dir");

  out.validate();
  return out;
}

namespace {

std::string env_value(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string() : std::string(v);
}

}  // namespace

void PipelineConfig::apply_secret_environment() {
  if (auto v = env_value("ZOTERO_API_KEY"); !v.empty()) library.api_key = v;
  if (auto v = env_value("LLM_API_KEY"); !v.empty()) {
    embedder.api_key = v;
    generation.api_key = v;
  }
}

void PipelineConfig::apply_environment() {
  apply_secret_environment();
  if (auto v = env_value("LLM_BASE_URL"); !v.empty()) {
    embedder.base_url = v;
    generation.base_url = v;
  }
  if (auto v = env_value("DATA_DIR"); !v.empty()) data_dir = v;
}

void PipelineConfig::use_mock_providers() {
  embedder.provider = EmbedderProvider::kLocalHash;
  embedder.dim = EmbedderConfig::kLocalDim;
  generation.provider = GenProvider::kScriptedMock;
}

std::vector<std::string> PipelineConfig::secrets() const {
  std::vector<std::string> out;
  for (const auto* s : {&library.api_key, &embedder.api_key, &generation.api_key}) {
    if (!s->empty()) out.push_back(*s);
  }
  return out;
}

std::vector<std::string> available_models() {
  return {"gpt-4", "gpt-4-turbo", "gpt-4o", "gpt-4o-mini", "gpt-3.5-turbo"};
}

}  // namespace zoterag
