#include "pointdc/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>

#include <json.hpp>

using nlohmann::json;

namespace pointdc {

namespace {

constexpr char kMagic[8] = {'P', 'O', 'I', 'N', 'T', 'D', 'C', '1'};

void copy_params_into(ParamSet& dst, const ParamSet& src, const std::string& path) {
    if (dst.entries().size() != src.entries().size())
        throw DataError(path + ": checkpoint has " + std::to_string(src.entries().size()) +
                        " parameters, model expects " +
                        std::to_string(dst.entries().size()));
    for (auto& e : dst.entries()) {
        if (!src.has(e.name))
            throw DataError(path + ": checkpoint is missing parameter '" + e.name + "'");
        const Tensor& v = src.entry(e.name).value;
        if (!v.same_shape(e.value))
            throw DataError(path + ": parameter '" + e.name + "' has shape " + v.shape_str() +
                            ", expected " + e.value.shape_str());
        e.value = v;
    }
}

int loaded_in_channels(const ParamSet& params) {
    return params.entry("backbone.conv0.w").value.dim(1);
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamSet& params) {
    json header;
    header["format"] = "pointdc-checkpoint";
    header["version"] = 1;
    header["kind"] = meta.kind;
    header["width"] = meta.width;
    header["stride"] = meta.stride;
    header["classes"] = meta.classes;
    header["encoder_kind"] = meta.encoder_kind;
    header["frozen"] = meta.frozen;
    json plist = json::array();
    for (const auto& e : params.entries()) {
        json p;
        p["name"] = e.name;
        p["shape"] = e.value.shape();
        plist.push_back(p);
    }
    header["params"] = plist;
    const std::string head_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t hlen = head_str.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(head_str.data(), static_cast<std::streamsize>(head_str.size()));
    for (const auto& e : params.entries())
        out.write(reinterpret_cast<const char*>(e.value.data()),
                  static_cast<std::streamsize>(e.value.size() * sizeof(double)));
    if (!out) throw IoError("short write on checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + sizeof(magic), kMagic))
        throw DataError("'" + path + "' is not a model checkpoint");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in || hlen == 0 || hlen > (1u << 20))
        throw DataError("'" + path + "' has a corrupt checkpoint header");
    std::string head_str(hlen, '\0');
    in.read(head_str.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw DataError("'" + path + "' is truncated");

    json header;
    try {
        header = json::parse(head_str);
    } catch (const json::exception& ex) {
        throw DataError("'" + path + "' checkpoint header is not valid JSON: " + ex.what());
    }
    LoadedCheckpoint ck;
    try {
        if (header.at("format").get<std::string>() != "pointdc-checkpoint")
            throw DataError("'" + path + "' has an unknown checkpoint format");
        ck.meta.kind = header.at("kind").get<std::string>();
        ck.meta.width = header.at("width").get<int>();
        ck.meta.stride = header.at("stride").get<int>();
        ck.meta.classes = header.at("classes").get<int>();
        ck.meta.encoder_kind = header.at("encoder_kind").get<std::string>();
        ck.meta.frozen = header.at("frozen").get<bool>();
        for (const auto& p : header.at("params")) {
            const auto name = p.at("name").get<std::string>();
            const auto shape = p.at("shape").get<std::vector<int>>();
            Tensor t(shape);
            in.read(reinterpret_cast<char*>(t.data()),
                    static_cast<std::streamsize>(t.size() * sizeof(double)));
            if (!in) throw DataError("'" + path + "' payload is truncated at '" + name + "'");
            ck.params.add(name, std::move(t));
        }
    } catch (const json::exception& ex) {
        throw DataError("'" + path + "' checkpoint header is malformed: " + ex.what());
    }
    return ck;
}

void save_detector(const std::string& path, const DetectorModel& model) {
    CheckpointMeta meta;
    meta.kind = "detector";
    meta.width = model.width;
    meta.stride = model.stride;
    save_checkpoint(path, meta, model.params);
}

DetectorModel load_detector(const std::string& path) {
    const LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.meta.kind != "detector")
        throw DataError("'" + path + "' holds a " + ck.meta.kind +
                        " checkpoint, expected detector");
    DetectorModel m = DetectorModel::create(ck.meta.width, 0, loaded_in_channels(ck.params));
    copy_params_into(m.params, ck.params, path);
    return m;
}

void save_encoder(const std::string& path, const Encoder& enc) {
    CheckpointMeta meta;
    meta.kind = "encoder";
    meta.width = enc.width;
    meta.stride = enc.stride;
    meta.encoder_kind = encoder_kind_name(enc.kind);
    meta.frozen = enc.frozen;
    save_checkpoint(path, meta, enc.params);
}

Encoder load_encoder(const std::string& path) {
    const LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.meta.kind != "encoder")
        throw DataError("'" + path + "' holds a " + ck.meta.kind +
                        " checkpoint, expected encoder");
    Encoder e = Encoder::create(ck.meta.width, 0, encoder_kind_from_name(ck.meta.encoder_kind),
                                ck.meta.frozen, loaded_in_channels(ck.params));
    copy_params_into(e.params, ck.params, path);
    return e;
}

void save_joint(const std::string& path, const JointModel& model) {
    CheckpointMeta meta;
    meta.kind = "joint";
    meta.width = model.width;
    meta.stride = model.stride;
    meta.classes = model.classes;
    save_checkpoint(path, meta, model.params);
}

JointModel load_joint(const std::string& path) {
    const LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.meta.kind != "joint")
        throw DataError("'" + path + "' holds a " + ck.meta.kind +
                        " checkpoint, expected joint");
    JointModel m = JointModel::create(ck.meta.width, ck.meta.classes, 0,
                                      loaded_in_channels(ck.params));
    copy_params_into(m.params, ck.params, path);
    return m;
}

void save_head(const std::string& path, const LinearHead& head) {
    CheckpointMeta meta;
    meta.kind = "head";
    meta.classes = head.classes();
    meta.width = head.feat_dim();
    ParamSet params;
    params.add("head.w", head.weight);
    params.add("head.b", head.bias);
    save_checkpoint(path, meta, params);
}

LinearHead load_head(const std::string& path) {
    const LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.meta.kind != "head")
        throw DataError("'" + path + "' holds a " + ck.meta.kind + " checkpoint, expected head");
    LinearHead h = LinearHead::create(ck.meta.classes, ck.meta.width);
    h.weight = ck.params.entry("head.w").value;
    h.bias = ck.params.entry("head.b").value;
    if (h.weight.dim(0) != ck.meta.classes || h.weight.dim(1) != ck.meta.width)
        throw DataError("'" + path + "' head shape does not match its header");
    return h;
}

}  // namespace pointdc
