// Copyright (c) 2026 The poivox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POIVOX_MANIFEST_HPP_
#define POIVOX_MANIFEST_HPP_

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "poivox/error.hpp"
#include "poivox/verification.hpp"

namespace poivox {

/// One dataset utterance. For fake entries, speaker_id is the claimed
/// identity the fake imitates. path resolves the audio file for
/// audio-backed runs; store-backed runs look embeddings up by
/// utterance_id.
struct ManifestEntry {
  std::string utterance_id;
  std::string speaker_id;
  Label label = Label::real;
  std::string path;
};

inline constexpr const char* kManifestCsvHeader = "utterance_id,speaker_id,label,path";

inline void validate_manifest(const std::vector<ManifestEntry>& manifest) {
  std::set<std::string> seen;
  for (const ManifestEntry& e : manifest) {
    if (e.utterance_id.empty()) throw DataError("manifest: empty utterance id");
    if (e.speaker_id.empty()) {
      throw DataError("manifest: entry '" + e.utterance_id + "' has no speaker id");
    }
    if (!seen.insert(e.utterance_id).second) {
      throw DataError("manifest: duplicate utterance id '" + e.utterance_id + "'");
    }
  }
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kManifestCsvHeader) {
    throw FormatError("manifest: missing or bad header: " + path);
  }
  std::vector<ManifestEntry> manifest;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() == 3) fields.push_back("");  // path may be empty
    if (fields.size() != 4) {
      throw FormatError("manifest: " + path + ":" + std::to_string(lineno) +
                        ": expected 4 fields");
    }
    ManifestEntry e;
    e.utterance_id = fields[0];
    e.speaker_id = fields[1];
    e.label = label_from_string(fields[2]);
    e.path = fields[3];
    // Relative audio paths resolve against the manifest's directory.
    if (!e.path.empty() && std::filesystem::path(e.path).is_relative()) {
      e.path = (std::filesystem::path(path).parent_path() / e.path).string();
    }
    manifest.push_back(std::move(e));
  }
  validate_manifest(manifest);
  return manifest;
}

inline void save_manifest(const std::vector<ManifestEntry>& manifest, const std::string& path) {
  std::ostringstream out;
  out << kManifestCsvHeader << '\n';
  for (const ManifestEntry& e : manifest) {
    out << e.utterance_id << ',' << e.speaker_id << ',' << to_string(e.label) << ','
        << e.path << '\n';
  }
  detail::write_file_bytes(path, out.str());
}

}  // namespace poivox

#endif  // POIVOX_MANIFEST_HPP_
