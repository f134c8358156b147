#include "moetrack/wire.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace moetrack {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::vector<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const std::string& k : known) ok = ok || k == key;
        MTK_CONFIG_REQUIRE(ok, where + ": unknown key '" + key + "'");
    }
}

json box_to_json(const Box& b) { return json::array({b.cx, b.cy, b.w, b.h}); }

Box box_from_json(const json& j, const std::string& where) {
    MTK_CONFIG_REQUIRE(j.is_array() && j.size() == 4, where + ": box must be [cx, cy, w, h]");
    Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    MTK_CONFIG_REQUIRE(box_valid(b), where + ": invalid box");
    return b;
}

json header_json(const std::string& format, int mask_h, int mask_w) {
    json h;
    h["format"] = format;
    h["version"] = kWireVersion;
    h["mask_height"] = mask_h;
    h["mask_width"] = mask_w;
    return h;
}

WireHeader parse_header(const std::string& line, const std::string& expect_format) {
    json h;
    try {
        h = json::parse(line);
    } catch (const json::exception& e) {
        throw config_error("bad header line: " + std::string(e.what()));
    }
    reject_unknown(h, {"format", "version", "mask_height", "mask_width"}, "header");
    MTK_CONFIG_REQUIRE(h.contains("format") && h["format"] == expect_format,
                       "header: expected format '" + expect_format + "'");
    MTK_CONFIG_REQUIRE(h.contains("version") && h["version"].get<int>() == kWireVersion,
                       "header: unsupported version");
    WireHeader out;
    out.format = expect_format;
    out.version = h["version"].get<int>();
    out.mask_h = h.value("mask_height", 0);
    out.mask_w = h.value("mask_width", 0);
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

} // namespace

std::string detections_to_string(int mask_h, int mask_w,
                                 const std::vector<FrameDetections>& stream) {
    std::string out = header_json("detections", mask_h, mask_w).dump() + "\n";
    for (const FrameDetections& fd : stream) {
        json line;
        line["frame"] = fd.frame;
        json dets = json::array();
        for (const Detection& d : fd.detections) {
            json jd;
            jd["box"] = box_to_json(d.box);
            jd["mask"] = d.mask.empty() ? json::array() : json(rle_encode(d.mask));
            jd["s_mask"] = d.s_mask;
            jd["s_occ"] = d.s_occ;
            if (d.feature) jd["feature"] = *d.feature;
            dets.push_back(std::move(jd));
        }
        line["detections"] = std::move(dets);
        out += line.dump() + "\n";
    }
    return out;
}

std::vector<FrameDetections> detections_from_string(const std::string& text,
                                                    WireHeader* header) {
    const std::vector<std::string> lines = split_lines(text);
    MTK_CONFIG_REQUIRE(!lines.empty(), "detections: missing header line");
    const WireHeader h = parse_header(lines[0], "detections");
    if (header) *header = h;
    std::vector<FrameDetections> out;
    for (size_t li = 1; li < lines.size(); ++li) {
        json line;
        try {
            line = json::parse(lines[li]);
        } catch (const json::exception& e) {
            throw config_error("detections line " + std::to_string(li) + ": " + e.what());
        }
        reject_unknown(line, {"frame", "detections"}, "detections line " + std::to_string(li));
        MTK_CONFIG_REQUIRE(line.contains("frame") && line.contains("detections"),
                           "detections line " + std::to_string(li) + ": missing keys");
        FrameDetections fd;
        fd.frame = line["frame"].get<int>();
        int rec = 0;
        for (const json& jd : line["detections"]) {
            const std::string where =
                "detections line " + std::to_string(li) + " record " + std::to_string(rec);
            try {
                reject_unknown(jd, {"box", "mask", "s_mask", "s_occ", "feature"}, where);
                MTK_CONFIG_REQUIRE(jd.contains("box") && jd.contains("mask") &&
                                       jd.contains("s_mask") && jd.contains("s_occ"),
                                   where + ": missing keys");
                Detection d;
                d.box = box_from_json(jd["box"], where);
                const auto runs = jd["mask"].get<std::vector<int64_t>>();
                if (!runs.empty()) d.mask = rle_decode(runs, h.mask_h, h.mask_w);
                d.s_mask = jd["s_mask"].get<double>();
                d.s_occ = jd["s_occ"].get<double>();
                if (jd.contains("feature")) d.feature = jd["feature"].get<Vec>();
                fd.detections.push_back(std::move(d));
            } catch (const contract_error& e) {
                throw config_error(where + ": " + e.what());
            }
            ++rec;
        }
        out.push_back(std::move(fd));
    }
    return out;
}

std::string tracks_to_string(int mask_h, int mask_w, const std::vector<TrackRecord>& records) {
    std::string out = header_json("tracks", mask_h, mask_w).dump() + "\n";
    std::map<int, std::vector<const TrackRecord*>> by_frame;
    for (const TrackRecord& r : records) by_frame[r.frame].push_back(&r);
    for (const auto& [frame, recs] : by_frame) {
        json line;
        line["frame"] = frame;
        json tracks = json::array();
        for (const TrackRecord* r : recs) {
            json jt;
            jt["id"] = r->id;
            jt["box"] = box_to_json(r->box);
            jt["affinity"] = r->affinity;
            tracks.push_back(std::move(jt));
        }
        line["tracks"] = std::move(tracks);
        out += line.dump() + "\n";
    }
    return out;
}

std::vector<TrackRecord> tracks_from_string(const std::string& text, WireHeader* header) {
    const std::vector<std::string> lines = split_lines(text);
    MTK_CONFIG_REQUIRE(!lines.empty(), "tracks: missing header line");
    const WireHeader h = parse_header(lines[0], "tracks");
    if (header) *header = h;
    std::vector<TrackRecord> out;
    for (size_t li = 1; li < lines.size(); ++li) {
        json line;
        try {
            line = json::parse(lines[li]);
        } catch (const json::exception& e) {
            throw config_error("tracks line " + std::to_string(li) + ": " + e.what());
        }
        reject_unknown(line, {"frame", "tracks"}, "tracks line " + std::to_string(li));
        const int frame = line.at("frame").get<int>();
        for (const json& jt : line.at("tracks")) {
            reject_unknown(jt, {"id", "box", "affinity"}, "tracks line " + std::to_string(li));
            TrackRecord r;
            r.frame = frame;
            r.id = jt.at("id").get<int64_t>();
            r.box = box_from_json(jt.at("box"), "tracks line " + std::to_string(li));
            r.affinity = jt.at("affinity").get<double>();
            out.push_back(r);
        }
    }
    return out;
}

std::string ground_truth_to_string(int mask_h, int mask_w, const std::vector<GtFrame>& frames) {
    std::string out = header_json("ground_truth", mask_h, mask_w).dump() + "\n";
    for (const GtFrame& f : frames) {
        json line;
        line["frame"] = f.frame;
        json objs = json::array();
        for (const GtObject& o : f.objects) {
            json jo;
            jo["id"] = o.id;
            jo["box"] = box_to_json(o.box);
            jo["mask"] = o.mask.empty() ? json::array() : json(rle_encode(o.mask));
            jo["visible"] = o.visible;
            objs.push_back(std::move(jo));
        }
        line["objects"] = std::move(objs);
        out += line.dump() + "\n";
    }
    return out;
}

std::vector<GtFrame> ground_truth_from_string(const std::string& text, WireHeader* header) {
    const std::vector<std::string> lines = split_lines(text);
    MTK_CONFIG_REQUIRE(!lines.empty(), "ground_truth: missing header line");
    const WireHeader h = parse_header(lines[0], "ground_truth");
    if (header) *header = h;
    std::vector<GtFrame> out;
    for (size_t li = 1; li < lines.size(); ++li) {
        json line;
        try {
            line = json::parse(lines[li]);
        } catch (const json::exception& e) {
            throw config_error("ground_truth line " + std::to_string(li) + ": " + e.what());
        }
        reject_unknown(line, {"frame", "objects"}, "ground_truth line " + std::to_string(li));
        GtFrame f;
        f.frame = line.at("frame").get<int>();
        for (const json& jo : line.at("objects")) {
            reject_unknown(jo, {"id", "box", "mask", "visible"},
                           "ground_truth line " + std::to_string(li));
            GtObject o;
            o.id = jo.at("id").get<int64_t>();
            o.box = box_from_json(jo.at("box"), "ground_truth line " + std::to_string(li));
            const auto runs = jo.at("mask").get<std::vector<int64_t>>();
            if (!runs.empty()) o.mask = rle_decode(runs, h.mask_h, h.mask_w);
            o.visible = jo.at("visible").get<bool>();
            f.objects.push_back(std::move(o));
        }
        out.push_back(std::move(f));
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    MTK_CONFIG_REQUIRE(f.good(), "cannot open for writing: " + path);
    f << content;
    MTK_CONFIG_REQUIRE(f.good(), "write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    MTK_CONFIG_REQUIRE(f.good(), "cannot open: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace moetrack
