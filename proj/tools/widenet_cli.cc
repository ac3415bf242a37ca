// widenet: offline processing and serving.
//
//   widenet load-graph   --graph-nodes N --graph-edges E [--out-nodes F --out-edges F]
//   widenet gen-fixture  --graph-nodes N --graph-edges E --seed S --docs D --out corpus.jsonl
//   widenet build-index  --corpus C --out snapshot.json
//   widenet export-session --graph-nodes N --graph-edges E (--corpus C | --index-snapshot I)
//                          --audit A --out export.jsonl [--include-unjudged]
//   widenet serve        --graph-nodes N --graph-edges E (--corpus C | --index-snapshot I) --port P

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "widenet/error.h"
#include "widenet/index.h"
#include "widenet/ingest.h"
#include "widenet/kb_graph.h"
#include "widenet/service.h"
#include "widenet/session.h"

namespace {

using namespace widenet;

struct GraphFlags {
  std::string nodes;
  std::string edges;
};

struct CorpusFlags {
  std::string corpus;
  std::string snapshot;
};

void add_graph_flags(CLI::App* cmd, GraphFlags& g) {
  cmd->add_option("--graph-nodes", g.nodes, "Node file (TSV)")
      ->envname("WIDENET_GRAPH_NODES")
      ->required();
  cmd->add_option("--graph-edges", g.edges, "Edge file (TSV)")
      ->envname("WIDENET_GRAPH_EDGES")
      ->required();
}

void add_corpus_flags(CLI::App* cmd, CorpusFlags& c) {
  auto* corpus = cmd->add_option("--corpus", c.corpus, "Annotated corpus (JSON lines)")
                     ->envname("WIDENET_CORPUS");
  auto* snap = cmd->add_option("--index-snapshot", c.snapshot, "Index snapshot")
                   ->envname("WIDENET_INDEX_SNAPSHOT");
  corpus->excludes(snap);
}

CorpusIndex load_index(const CorpusFlags& c) {
  if (!c.snapshot.empty()) {
    std::ifstream in(c.snapshot);
    if (!in) throw Error(ErrorCode::not_found, "cannot open " + c.snapshot);
    return CorpusIndex::load_snapshot(in);
  }
  if (c.corpus.empty()) {
    throw Error(ErrorCode::invalid_input, "one of --corpus or --index-snapshot is required");
  }
  auto parsed = parse_corpus_file(c.corpus);
  for (const auto& w : parsed.warnings) {
    std::cerr << "warning: line " << w.line << " (" << w.doc_id << "): " << w.message
              << '\n';
  }
  return build_index(std::move(parsed.documents));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::internal, "cannot write " + path);
  return out;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WideNet corpus selection engine"};
  app.require_subcommand(1);

  GraphFlags graph;
  CorpusFlags corpus;
  std::string out_path;
  std::string out_nodes, out_edges;
  std::uint64_t seed = 7;
  std::int64_t docs = 200;
  std::string mix_path, truth_path;
  std::string audit_path;
  bool include_unjudged = false;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string session_dir;

  auto* load = app.add_subcommand("load-graph", "Validate a graph and report counts");
  add_graph_flags(load, graph);
  load->add_option("--out-nodes", out_nodes, "Re-serialize nodes to this file");
  load->add_option("--out-edges", out_edges, "Re-serialize edges to this file");

  auto* gen = app.add_subcommand("gen-fixture", "Generate a synthetic annotated corpus");
  add_graph_flags(gen, graph);
  gen->add_option("--seed", seed, "RNG seed")->envname("WIDENET_SEED");
  gen->add_option("--docs", docs, "Number of documents")
      ->envname("WIDENET_DOCS")
      ->check(CLI::PositiveNumber);
  gen->add_option("--mix", mix_path, "Mix definition (JSON); default: whole graph");
  gen->add_option("--truth", truth_path, "Truth sidecar (default: <out>.truth.json)");
  gen->add_option("--out", out_path, "Corpus output")->envname("WIDENET_OUT")->required();

  auto* build = app.add_subcommand("build-index", "Build an index snapshot from a corpus");
  build->add_option("--corpus", corpus.corpus, "Annotated corpus (JSON lines)")
      ->envname("WIDENET_CORPUS")
      ->required();
  build->add_option("--out", out_path, "Snapshot output")
      ->envname("WIDENET_INDEX_SNAPSHOT")
      ->required();

  auto* exp = app.add_subcommand("export-session", "Replay an audit log and export its corpus");
  add_graph_flags(exp, graph);
  add_corpus_flags(exp, corpus);
  exp->add_option("--audit", audit_path, "Session audit file")->required();
  exp->add_flag("--include-unjudged", include_unjudged, "Also export unjudged documents");
  exp->add_option("--out", out_path, "Export output")->envname("WIDENET_OUT")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  add_graph_flags(serve, graph);
  add_corpus_flags(serve, corpus);
  serve->add_option("--port", port, "Port")->envname("WIDENET_PORT");
  serve->add_option("--host", host, "Bind address")->envname("WIDENET_HOST");
  serve->add_option("--session-dir", session_dir, "Directory for session audit logs")
      ->envname("WIDENET_SESSION_DIR");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*load) {
      auto loaded = load_graph_files(graph.nodes, graph.edges);
      std::cout << "categories " << loaded.report.categories << "\nentities "
                << loaded.report.entities << "\nedges " << loaded.report.edges
                << "\nduplicate_edges " << loaded.report.duplicate_edges << '\n';
      std::size_t dated = 0;
      for (const auto& e : loaded.graph.entities()) dated += !e.clues.empty();
      std::cout << "dated_entities " << dated << '\n';
      if (!out_nodes.empty()) {
        auto out = open_out(out_nodes);
        write_nodes(loaded.graph, out);
      }
      if (!out_edges.empty()) {
        auto out = open_out(out_edges);
        write_edges(loaded.graph, out);
      }
    } else if (*gen) {
      auto loaded = load_graph_files(graph.nodes, graph.edges);
      FixtureMix mix = FixtureMix::whole_graph(loaded.graph);
      if (!mix_path.empty()) {
        std::ifstream in(mix_path);
        if (!in) throw Error(ErrorCode::not_found, "cannot open " + mix_path);
        std::string text((std::istreambuf_iterator<char>(in)), {});
        mix = FixtureMix::from_json(text, loaded.graph);
      }
      auto fixture = generate_fixture(seed, docs, loaded.graph, mix);
      {
        auto out = open_out(out_path);
        write_corpus(fixture.documents, out);
      }
      if (truth_path.empty()) {
        auto dot = out_path.rfind(".jsonl");
        truth_path = (dot == std::string::npos ? out_path : out_path.substr(0, dot)) +
                     ".truth.json";
      }
      auto truth = open_out(truth_path);
      write_truth(fixture.truth, truth);
      std::cout << "documents " << fixture.documents.size() << "\ncorpus " << out_path
                << "\ntruth " << truth_path << '\n';
    } else if (*build) {
      auto index = load_index(corpus);
      auto out = open_out(out_path);
      index.save_snapshot(out);
      std::cout << "documents " << index.documents().size() << "\nentities "
                << index.postings().size() << "\nannotations "
                << index.annotation_count() << '\n';
    } else if (*exp) {
      auto loaded = load_graph_files(graph.nodes, graph.edges);
      auto index = load_index(corpus);
      std::ifstream in(audit_path);
      if (!in) throw Error(ErrorCode::not_found, "cannot open " + audit_path);
      Session s = Session::replay(loaded.graph, read_audit(in), &index);
      auto out = open_out(out_path);
      auto n = s.export_corpus(index, {include_unjudged}, out);
      std::cout << "session " << s.id() << "\ndocuments " << n << '\n';
    } else if (*serve) {
      auto loaded = load_graph_files(graph.nodes, graph.edges);
      auto g = std::make_shared<const KnowledgeGraph>(std::move(loaded.graph));
      auto idx = std::make_shared<const CorpusIndex>(load_index(corpus));
      Api::Options options;
      if (!session_dir.empty()) options.session_dir = session_dir;
      Api api(g, idx, options);
      HttpServer server(api);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << idx->documents().size() << " documents, "
                << g->entities().size() << " entities on " << host << ":" << port
                << '\n';
      server.run(host, port);
      g_server = nullptr;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  }
  return 0;
}
