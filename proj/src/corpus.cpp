#include "ragent/corpus.hpp"

#include <sstream>

#include "json.hpp"
#include "ragent/error.hpp"
#include "ragent/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ragent {

std::vector<ManifestRecord> read_manifest(const fs::path& path)
{
    std::istringstream is(io::read_text(path));
    const fs::path base = path.parent_path();
    std::vector<ManifestRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            ManifestRecord r;
            r.segment_id = j.at("segment_id").get<std::string>();
            r.clip_id = j.value("clip_id", r.segment_id);
            if (j.contains("cube")) r.cube = base / j.at("cube").get<std::string>();
            if (j.contains("dtm")) r.dtm = base / j.at("dtm").get<std::string>();
            if (j.contains("rtm")) r.rtm = base / j.at("rtm").get<std::string>();
            if (r.cube.empty() && (r.dtm.empty() || r.rtm.empty()))
                throw Error(ErrorCode::FormatError, "record needs a cube or a dtm/rtm pair");
            r.label = j.value("label", "");
            r.split = j.value("split", "");
            r.domain = {j.value("environment", ""), j.value("subject", ""), j.value("date", "")};
            r.meta.frame_rate = j.value("frame_rate", r.meta.frame_rate);
            r.meta.wavelength = j.value("wavelength", r.meta.wavelength);
            r.meta.range_resolution = j.value("range_resolution", r.meta.range_resolution);
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::FormatError) throw;
            throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

CorpusSegment load_segment(const ManifestRecord& rec, const DspConfig& dsp)
{
    CorpusSegment s;
    s.segment_id = rec.segment_id;
    s.clip_id = rec.clip_id;
    s.domain = rec.domain;
    if (!rec.cube.empty()) {
        const RadarCube cube = io::read_cube(rec.cube);
        RadarMaps maps = process_cube(cube, dsp);
        s.dtm = std::move(maps.dtm);
        s.rtm = std::move(maps.rtm);
        s.meta = {cube.meta().frame_rate, cube.meta().wavelength, cube.meta().range_resolution};
    } else {
        s.dtm = io::read_matrix(rec.dtm);
        s.rtm = io::read_matrix(rec.rtm);
        s.meta = rec.meta;
    }
    return s;
}

CorpusSegment load_segment_arg(const std::string& arg, const DspConfig& dsp)
{
    ManifestRecord r;
    const auto comma = arg.find(',');
    if (comma == std::string::npos) {
        r.cube = arg;
    } else {
        r.dtm = arg.substr(0, comma);
        r.rtm = arg.substr(comma + 1);
        if (fs::exists(io::meta_path_for(r.dtm))) {
            const RadarMeta m = io::decode_meta(io::read_text(io::meta_path_for(r.dtm)));
            r.meta = {m.frame_rate, m.wavelength, m.range_resolution};
        }
    }
    r.segment_id = r.clip_id = fs::path(comma == std::string::npos ? arg : arg.substr(0, comma)).stem().string();
    return load_segment(r, dsp);
}

}  // namespace ragent
