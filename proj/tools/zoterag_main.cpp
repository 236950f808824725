#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "zoterag/config.hpp"
#include "zoterag/error.hpp"
#include "zoterag/fs_util.hpp"
#include "zoterag/http.hpp"
#include "zoterag/http_api.hpp"
#include "zoterag/logging.hpp"
#include "zoterag/session.hpp"

namespace {

using namespace zoterag;
using nlohmann::json;

struct Flags {
  std::optional<std::string> library_type;
  std::optional<std::string> library_id;
  std::size_t chunk_size = 500;
  std::size_t chunk_overlap = 200;
  std::string model = "gpt-4";
  std::size_t max_tokens = 4000;
  std::size_t k = 7;
  std::string search_type = "mmr";
  std::optional<double> mmr_lambda;
  std::optional<double> score_threshold;
  std::optional<std::string> data_dir;
  bool mock_providers = false;
  std::string mock_script;
  std::string zotero_fixtures;
  std::string provider_fixtures;
  std::string zotero_api_base = std::string(kZoteroApiBase);
  std::string log_level = "info";
};

PipelineConfig build_config(const Flags& f) {
  PipelineConfig cfg = PipelineConfig::defaults();
  cfg.apply_environment();
  if (f.mock_providers) cfg.use_mock_providers();
  json patch = {{"chunk_size", f.chunk_size},
                {"chunk_overlap", f.chunk_overlap},
                {"model", f.model},
                {"max_tokens", f.max_tokens},
                {"k", f.k},
                {"search_type", f.search_type}};
  if (f.library_type) patch["library_type"] = *f.library_type;
  if (f.library_id) patch["library_id"] = *f.library_id;
  if (f.mmr_lambda) patch["mmr_lambda"] = *f.mmr_lambda;
  if (f.score_threshold) patch["score_threshold"] = *f.score_threshold;
  if (f.data_dir) patch["data_dir"] = *f.data_dir;
  if (!f.mock_script.empty()) patch["generation"] = {{"script_path", f.mock_script}};
  cfg = cfg.patched(patch);
  cfg.apply_secret_environment();
  return cfg;
}

std::unique_ptr<ChatService> make_service(const Flags& f) {
  ChatService::Options opts;
  opts.config = build_config(f);
  auto limiter = std::make_shared<http::HostLimiter>();
  if (!f.zotero_fixtures.empty()) {
    opts.deps.zotero_transport = std::make_shared<http::FixtureTransport>(f.zotero_fixtures);
  } else {
    opts.deps.zotero_transport = std::make_shared<http::NetworkTransport>(limiter);
  }
  if (!f.provider_fixtures.empty()) {
    opts.deps.provider_transport =
        std::make_shared<http::FixtureTransport>(f.provider_fixtures);
  } else {
    opts.deps.provider_transport = std::make_shared<http::NetworkTransport>(limiter);
  }
  opts.deps.zotero_api_base = f.zotero_api_base;
  return std::make_unique<ChatService>(std::move(opts));
}

void print_report(const IngestReport& r) {
  std::cout << "status: " << to_string(r.status) << "\n"
            << "source: " << r.source << "\n"
            << "documents ingested: " << r.documents_ingested << "\n"
            << "documents skipped: " << r.documents_skipped() << "\n";
  for (const auto& s : r.skipped) {
    std::cout << "  " << s.filename << " (" << s.reason << ")\n";
  }
  std::cout << "non-PDF attachments skipped: " << r.skipped_non_pdf << "\n"
            << "chunks created: " << r.chunks_created << "\n"
            << "records indexed: " << r.records_indexed << "\n";
  if (r.status == JobStatus::kFailed) {
    std::cout << "error: " << r.error_code << ": " << r.error << "\n";
  }
}

HttpApi* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Question answering over the PDFs in a Zotero library"};
  app.require_subcommand(1);
  Flags f;

  app.add_option("--library-type", f.library_type, "Zotero library type")
      ->check(CLI::IsMember({"user", "group"}));
  app.add_option("--library-id", f.library_id, "Numeric Zotero library id");
  app.add_option("--chunk-size", f.chunk_size, "Chunk size in characters")
      ->capture_default_str();
  app.add_option("--chunk-overlap", f.chunk_overlap, "Chunk overlap in characters")
      ->capture_default_str();
  app.add_option("--model", f.model, "Chat model id")->capture_default_str();
  app.add_option("--max-tokens", f.max_tokens, "Maximum answer tokens")
      ->capture_default_str();
  app.add_option("--k", f.k, "Number of chunks to retrieve")->capture_default_str();
  app.add_option("--search-type", f.search_type, "Retrieval strategy")
      ->check(CLI::IsMember({"similarity", "mmr", "similarity_score_threshold"}))
      ->capture_default_str();
  app.add_option("--mmr-lambda", f.mmr_lambda, "MMR relevance/diversity trade-off");
  app.add_option("--score-threshold", f.score_threshold, "Minimum similarity score");
  app.add_option("--data-dir", f.data_dir, "Data directory (default $DATA_DIR or ./data)");
  app.add_flag("--mock-providers", f.mock_providers,
               "Use local hash embeddings and the scripted mock generator");
  app.add_option("--mock-script", f.mock_script, "Script file for the mock generator");
  app.add_option("--zotero-fixtures", f.zotero_fixtures,
                 "Replay Zotero traffic from a recorded fixture directory");
  app.add_option("--provider-fixtures", f.provider_fixtures,
                 "Replay embedding/chat traffic from a recorded fixture directory");
  app.add_option("--zotero-api-base", f.zotero_api_base, "Zotero API base URL")
      ->capture_default_str();
  app.add_option("--log-level", f.log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str();

  std::string source = "auto";
  auto* ingest = app.add_subcommand("ingest", "Fetch, extract, chunk, embed and index PDFs");
  ingest->add_option("--source", source, "zotero, local or auto")
      ->check(CLI::IsMember({"zotero", "local", "auto"}))
      ->capture_default_str();

  std::string question;
  std::string session_id = "cli";
  bool as_json = false;
  auto* ask = app.add_subcommand("ask", "Answer one question");
  ask->add_option("question", question, "The question")->required();
  ask->add_option("--session", session_id, "Session id")->capture_default_str();
  ask->add_flag("--json", as_json, "Print the answer as JSON");

  auto* chat = app.add_subcommand("chat", "Interactive question answering");
  chat->add_option("--session", session_id, "Session id")->capture_default_str();

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API and web client");
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port")->capture_default_str();

  std::string export_id;
  std::string output;
  auto* exp = app.add_subcommand("export-history", "Write a session transcript");
  exp->add_option("session", export_id, "Session id")->required();
  exp->add_option("-o,--output", output, "Output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  logging::install();
  logging::get()->set_level(spdlog::level::from_str(f.log_level));

  try {
    auto service = make_service(f);

    if (ingest->parsed()) {
      const std::string job = service->start_ingest({{"source", source}});
      const IngestReport report = service->wait_ingest(job);
      print_report(report);
      return report.status == JobStatus::kDone ? 0 : 1;
    }

    if (ask->parsed()) {
      const Answer answer = service->ask(session_id, question);
      if (as_json) {
        std::cout << to_json(answer).dump(2) << "\n";
      } else {
        std::cout << render_answer(answer);
      }
      return 0;
    }

    if (chat->parsed()) {
      std::cout << "Type a question, or 'exit' to quit.\n";
      std::string line;
      while (true) {
        std::cout << "> " << std::flush;
        if (!std::getline(std::cin, line)) break;
        if (line == "exit" || line == "quit") break;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          std::cout << render_answer(service->ask(session_id, line)) << "\n";
        } catch (const Error& e) {
          std::cout << "error: " << to_string(e.code()) << ": "
                    << logging::redact(e.what()) << "\n";
        }
      }
      return 0;
    }

    if (serve->parsed()) {
      HttpApi api(*service);
      const int bound = api.bind(host, port);
      g_server = &api;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      logging::get()->info("listening on http://{}:{}/", host, bound);
      api.listen();
      g_server = nullptr;
      return 0;
    }

    if (exp->parsed()) {
      const std::string transcript = service->export_history(export_id);
      if (output.empty()) {
        std::cout << transcript;
      } else {
        fs_util::write_file_atomic(output, transcript);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << logging::redact(e.what())
              << "\n";
    return 2;
  }
  return 0;
}
