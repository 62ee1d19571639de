#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ragent/kb.hpp"
#include "ragent/radar_dsp.hpp"

namespace ragent {

/// One manifest line. A segment is either a cube file (processed with the DSP chain) or a DTM/RTM pair.
struct ManifestRecord {
    std::string segment_id;
    std::string clip_id;
    std::filesystem::path cube;
    std::filesystem::path dtm;
    std::filesystem::path rtm;
    std::string label;
    std::string split;
    DomainMeta domain;
    FeatureMeta meta;  ///< used for DTM/RTM pairs; cubes carry their own
};

/// Reads a line-delimited manifest; relative paths resolve against the manifest's directory.
/// Throws IoError / FormatError.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

/// Loads maps for a record, running the DSP chain for cube records.
CorpusSegment load_segment(const ManifestRecord& rec, const DspConfig& dsp = {});

/// Segment from a single file argument: a cube (.rgc), or "<dtm.rgm>,<rtm.rgm>".
CorpusSegment load_segment_arg(const std::string& arg, const DspConfig& dsp = {});

}  // namespace ragent
