#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "widenet/error.h"
#include "widenet/index.h"
#include "widenet/ingest.h"
#include "widenet/kb_graph.h"
#include "widenet/service.h"
#include "widenet/session.h"
#include "widenet/temporal_filter.h"

namespace py = pybind11;
using namespace widenet;

namespace {

py::dict features_dict(const ClassificationFeatures& f) {
  py::dict d;
  d["frac_years_in"] = f.frac_years_in ? py::object(py::float_(f.frac_years_in->value()))
                                       : py::object(py::none());
  d["frac_intervals_overlap"] =
      f.frac_intervals_overlap ? py::object(py::float_(f.frac_intervals_overlap->value()))
                               : py::object(py::none());
  d["has_year_in_period"] = f.has_year_in_period;
  return d;
}

py::dict tree_dict(const CandidateTree& tree) {
  py::list groups;
  for (const auto& g : tree.groups) {
    py::list cats;
    for (const auto& c : g.categories) {
      py::list ents;
      for (const auto& e : c.entities) {
        ents.append(py::make_tuple(e.id, std::string(to_string(e.temporal_class))));
      }
      py::dict cd;
      cd["id"] = c.id;
      cd["depth"] = c.depth;
      cd["auto_selected"] = c.decision.auto_selected;
      cd["dated_member_count"] = c.decision.dated_member_count;
      cd["out_of_period_count"] = c.decision.out_of_period_count;
      cd["entities"] = ents;
      cats.append(cd);
    }
    py::dict gd;
    gd["root"] = g.root;
    gd["categories"] = cats;
    groups.append(gd);
  }
  py::dict classes;
  for (const auto& [e, cls] : tree.classes) classes[py::str(e)] = std::string(to_string(cls));
  py::dict out;
  out["groups"] = groups;
  out["classes"] = classes;
  return out;
}

TemporalClass class_from_string(const std::string& s) {
  auto c = parse_temporal_class(s);
  if (!c) throw Error(ErrorCode::invalid_input, "unknown temporal class '" + s + "'");
  return *c;
}

}  // namespace

PYBIND11_MODULE(_widenet, m) {
  m.doc() = "WideNet corpus-selection engine";

  static py::object error_type =
      py::reinterpret_borrow<py::object>(PyExc_RuntimeError);
  error_type = py::reinterpret_steal<py::object>(
      PyErr_NewException("widenet.WidenetError", PyExc_RuntimeError, nullptr));
  m.attr("WidenetError") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = error_type(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), instance.ptr());
    }
  });

  py::enum_<TemporalClass>(m, "TemporalClass")
      .value("InPeriod", TemporalClass::InPeriod)
      .value("OutOfPeriod", TemporalClass::OutOfPeriod)
      .value("Borderline", TemporalClass::Borderline)
      .value("Undated", TemporalClass::Undated);

  py::class_<Period>(m, "Period")
      .def(py::init<int, int>(), py::arg("start_year"), py::arg("end_year"))
      .def_property_readonly("start_year", &Period::start_year)
      .def_property_readonly("end_year", &Period::end_year)
      .def("__repr__", [](const Period& p) {
        return "Period(" + std::to_string(p.start_year()) + ", " +
               std::to_string(p.end_year()) + ")";
      });

  py::class_<TemporalClues>(m, "TemporalClues")
      .def(py::init([](std::set<int> years, std::vector<std::pair<int, int>> intervals) {
             TemporalClues c;
             c.years = std::move(years);
             for (auto [a, b] : intervals) {
               if (a > b) throw Error(ErrorCode::invalid_input, "interval start after end");
               c.intervals.insert({a, b});
             }
             return c;
           }),
           py::arg("years") = std::set<int>{},
           py::arg("intervals") = std::vector<std::pair<int, int>>{})
      .def_readonly("years", &TemporalClues::years)
      .def_property_readonly("intervals", [](const TemporalClues& c) {
        std::set<std::pair<int, int>> out;
        for (const auto& iv : c.intervals) out.emplace(iv.start_year, iv.end_year);
        return out;
      })
      .def("empty", &TemporalClues::empty);

  m.def("extract_clues", &extract_clues, py::arg("description"));
  m.def("compute_features", [](const TemporalClues& c, const Period& p) {
    return features_dict(compute_features(c, p));
  });
  m.def("classify_entity", &classify_entity, py::arg("clues"), py::arg("period"));
  m.def("prune_categories",
        [](const std::map<CategoryId, std::set<EntityId>>& memberships,
           const std::map<EntityId, std::string>& classes) {
          std::map<EntityId, TemporalClass> typed;
          for (const auto& [e, c] : classes) typed.emplace(e, class_from_string(c));
          py::list out;
          for (const auto& d : prune_categories(memberships, typed)) {
            py::dict row;
            row["category"] = d.category;
            row["auto_selected"] = d.auto_selected;
            row["dated_member_count"] = d.dated_member_count;
            row["out_of_period_count"] = d.out_of_period_count;
            out.append(row);
          }
          return out;
        });

  py::class_<KnowledgeGraph, std::shared_ptr<KnowledgeGraph>>(m, "KnowledgeGraph")
      .def_property_readonly("category_ids",
                             [](const KnowledgeGraph& g) {
                               std::vector<std::string> ids;
                               for (const auto& c : g.categories()) ids.push_back(c.id);
                               return ids;
                             })
      .def_property_readonly("entity_ids",
                             [](const KnowledgeGraph& g) {
                               std::vector<std::string> ids;
                               for (const auto& e : g.entities()) ids.push_back(e.id);
                               return ids;
                             })
      .def_property_readonly("edge_count",
                             [](const KnowledgeGraph& g) { return g.edges().size(); })
      .def("clues",
           [](const KnowledgeGraph& g, const std::string& entity) {
             const EntityNode* e = g.find_entity(entity);
             if (!e) throw Error(ErrorCode::not_found, "unknown entity '" + entity + "'");
             return e->clues;
           })
      .def("descendant_categories", &descendant_categories, py::arg("roots"),
           py::arg("max_depth") = kDefaultMaxDepth)
      .def("member_entities", &member_entities, py::arg("categories"));

  m.def("load_graph", [](const std::string& nodes, const std::string& edges) {
    return std::make_shared<KnowledgeGraph>(load_graph_files(nodes, edges).graph);
  }, py::arg("nodes_path"), py::arg("edges_path"));

  m.def("candidate_set",
        [](const KnowledgeGraph& g, const std::set<CategoryId>& roots, const Period& p,
           int max_depth) { return tree_dict(candidate_set(g, roots, p, max_depth)); },
        py::arg("graph"), py::arg("roots"), py::arg("period"),
        py::arg("max_depth") = kDefaultMaxDepth);

  py::class_<EntityAnnotation>(m, "EntityAnnotation")
      .def_readonly("entity", &EntityAnnotation::entity)
      .def_readonly("begin", &EntityAnnotation::begin)
      .def_readonly("end", &EntityAnnotation::end)
      .def_readonly("surface", &EntityAnnotation::surface)
      .def_readonly("confidence", &EntityAnnotation::confidence);

  py::class_<AnnotatedDocument>(m, "AnnotatedDocument")
      .def_readonly("doc_id", &AnnotatedDocument::doc_id)
      .def_readonly("text", &AnnotatedDocument::text)
      .def_property_readonly("date",
                             [](const AnnotatedDocument& d) { return d.date.to_string(); })
      .def_readonly("speaker", &AnnotatedDocument::speaker)
      .def_readonly("party", &AnnotatedDocument::party)
      .def_readonly("debate_title", &AnnotatedDocument::debate_title)
      .def_readonly("annotations", &AnnotatedDocument::annotations);

  m.def("parse_corpus", [](const std::string& path) {
    auto parsed = parse_corpus_file(path);
    std::vector<std::string> warnings;
    for (const auto& w : parsed.warnings) warnings.push_back(w.message);
    return py::make_tuple(parsed.documents, warnings);
  }, py::arg("path"));

  m.def("write_corpus", [](const std::vector<AnnotatedDocument>& docs,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::internal, "cannot write " + path);
    write_corpus(docs, out);
  });

  m.def("generate_fixture",
        [](std::uint64_t seed, std::int64_t n_docs, const KnowledgeGraph& g,
           std::optional<std::string> mix_json) {
          FixtureMix mix = mix_json ? FixtureMix::from_json(*mix_json, g)
                                    : FixtureMix::whole_graph(g);
          Fixture f = generate_fixture(seed, n_docs, g, mix);
          std::map<std::string, std::pair<std::int64_t, std::int64_t>> truth;
          for (const auto& [e, t] : f.truth) truth[e] = {t.mentions, t.documents};
          return py::make_tuple(f.documents, truth);
        },
        py::arg("seed"), py::arg("n_docs"), py::arg("graph"),
        py::arg("mix_json") = py::none());

  py::class_<CorpusIndex, std::shared_ptr<CorpusIndex>>(m, "CorpusIndex")
      .def(py::init([](std::vector<AnnotatedDocument> docs) {
        return std::make_shared<CorpusIndex>(std::move(docs));
      }))
      .def_static("load_snapshot", [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
        return std::make_shared<CorpusIndex>(CorpusIndex::load_snapshot(in));
      })
      .def("save_snapshot", [](const CorpusIndex& idx, const std::string& path) {
        std::ofstream out(path, std::ios::binary);
        idx.save_snapshot(out);
      })
      .def_property_readonly("document_count",
                             [](const CorpusIndex& idx) { return idx.documents().size(); })
      .def("frequencies", [](const CorpusIndex& idx, const std::set<EntityId>& entities) {
        py::dict out;
        for (const auto& row : idx.frequencies(entities)) {
          py::dict r;
          r["documents"] = row.documents;
          r["mentions"] = row.mentions;
          r["absent"] = row.absent;
          out[py::str(row.entity)] = r;
        }
        return out;
      })
      .def("preview",
           [](const CorpusIndex& idx, const std::set<EntityId>& entities, int limit,
              int window) {
             py::dict out;
             for (const auto& [e, snippets] : idx.preview(entities, {limit, window})) {
               py::list l;
               for (const auto& s : snippets) {
                 py::dict d;
                 d["doc_id"] = s.doc_id;
                 d["snippet"] = s.snippet;
                 d["mention_offset"] = s.mention_offset;
                 l.append(d);
               }
               out[py::str(e)] = l;
             }
             return out;
           },
           py::arg("entities"), py::arg("per_entity_limit") = 3, py::arg("window") = 150)
      .def("retrieve",
           [](const CorpusIndex& idx, const std::set<EntityId>& entities,
              std::optional<std::pair<int, int>> years) {
             std::optional<Period> filter;
             if (years) filter = Period(years->first, years->second);
             py::list out;
             for (const auto& hit : idx.retrieve(entities, filter)) {
               out.append(py::make_tuple(hit.doc_id, hit.matched, hit.mentions));
             }
             return out;
           },
           py::arg("entities"), py::arg("years") = py::none())
      .def("aggregate", [](const CorpusIndex& idx, const std::set<EntityId>& entities,
                           const std::string& dimension) {
        std::map<std::string, std::pair<std::int64_t, std::int64_t>> out;
        for (const auto& [k, b] : idx.aggregate(entities, parse_dimension(dimension))) {
          out[k] = {b.documents, b.mentions};
        }
        return out;
      });

  py::class_<Session>(m, "Session")
      .def_static("create",
                  [](const KnowledgeGraph& g, const std::set<CategoryId>& roots,
                     const Period& period, int max_depth, const std::string& id) {
                    return Session::create(g, {roots, period, max_depth}, id);
                  },
                  py::arg("graph"), py::arg("roots"), py::arg("period"),
                  py::arg("max_depth") = kDefaultMaxDepth, py::arg("session_id") = "session")
      .def_static("replay",
                  [](const KnowledgeGraph& g, const std::vector<std::string>& lines,
                     const CorpusIndex* index) {
                    std::vector<AuditRecord> records;
                    for (const auto& l : lines) records.push_back(parse_audit_record(l));
                    return Session::replay(g, records, index);
                  },
                  py::arg("graph"), py::arg("audit_lines"), py::arg("index") = nullptr)
      .def_property_readonly("id", &Session::id)
      .def_property_readonly("tree", [](const Session& s) { return tree_dict(s.tree()); })
      .def("category_selected", &Session::category_selected)
      .def("entity_selected", &Session::entity_selected)
      .def("toggle_category",
           [](Session& s, const CategoryId& c) { s.toggle_category(c); })
      .def("toggle_entity", [](Session& s, const EntityId& e) { s.toggle_entity(e); })
      .def("effective_query", &Session::effective_query)
      .def("assess_document",
           [](Session& s, const CorpusIndex& idx, const DocId& doc,
              const std::string& verdict) {
             auto v = parse_verdict(verdict);
             if (!v) throw Error(ErrorCode::invalid_input, "unknown verdict " + verdict);
             s.assess_document(idx, doc, *v);
           })
      .def("results",
           [](const Session& s, const CorpusIndex& idx) {
             std::vector<std::string> ids;
             for (const auto& h : s.results(idx)) ids.push_back(h.doc_id);
             return ids;
           })
      .def("missing_entities", &Session::missing_entities)
      .def("audit_lines",
           [](const Session& s) {
             std::vector<std::string> out;
             for (const auto& r : s.audit_log()) out.push_back(serialize_audit_record(r));
             return out;
           })
      .def("export_corpus", [](const Session& s, const CorpusIndex& idx,
                               bool include_unjudged) {
        std::ostringstream out;
        s.export_corpus(idx, {include_unjudged}, out);
        return out.str();
      }, py::arg("index"), py::arg("include_unjudged") = false);

  py::class_<Api>(m, "Api")
      .def(py::init([](std::shared_ptr<KnowledgeGraph> g, std::shared_ptr<CorpusIndex> idx) {
        return std::make_unique<Api>(g, idx);
      }))
      .def("handle",
           [](Api& api, const std::string& method, const std::string& path,
              std::map<std::string, std::string> query, const std::string& body) {
             ApiResponse r;
             {
               py::gil_scoped_release release;
               r = api.handle({method, path, std::move(query), body});
             }
             return py::make_tuple(r.status, r.content_type, r.body);
           },
           py::arg("method"), py::arg("path"),
           py::arg("query") = std::map<std::string, std::string>{},
           py::arg("body") = "");
}
