#ifndef WIDENET_SRC_JSON_CODEC_H
#define WIDENET_SRC_JSON_CODEC_H

// JSON shapes shared by the corpus, export and snapshot formats.

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "widenet/ingest.h"

namespace widenet::codec {

using Json = nlohmann::ordered_json;

Json to_json(const EntityAnnotation& a);
Json to_json(const AnnotatedDocument& doc);

// Structural decode of one corpus record. Throws ParseError(line) when a
// required field is missing or mistyped. Annotations that are structurally
// sound but inconsistent with the text are dropped into `warnings`.
AnnotatedDocument document_from_json(const Json& record, std::int64_t line,
                                     std::vector<IngestWarning>& warnings);

}  // namespace widenet::codec

#endif  // WIDENET_SRC_JSON_CODEC_H
