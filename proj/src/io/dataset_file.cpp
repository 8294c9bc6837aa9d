#include "ulab/io/dataset_file.hpp"

#include <fstream>
#include <sstream>

#include "binary.hpp"

namespace ulab {

namespace detail {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace detail

namespace {

using detail::ByteReader;
using detail::ByteWriter;

constexpr std::string_view kMagic = "CGRD1";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kKindDataset = 0;
constexpr std::uint8_t kKindPoisoned = 1;
constexpr std::uint64_t kNone = ~std::uint64_t{0};

void write_optional(ByteWriter& w, const std::optional<std::size_t>& v) { w.u64(v ? *v : kNone); }

std::optional<std::size_t> read_optional(ByteReader& r) {
    const auto v = r.u64();
    if (v == kNone) return std::nullopt;
    return static_cast<std::size_t>(v);
}

void write_spec(ByteWriter& w, const DatasetSpec& s) {
    w.u64(s.num_classes);
    w.u64(s.num_concepts);
    w.u64(s.grid);
    w.u64(s.patch_size);
    w.u64(s.train_per_class);
    w.u64(s.test_per_class);
    w.f64(s.noise);
    w.f64(s.secondary_inclusion);
    w.f64(s.confusion_inclusion);
    w.u64(s.secondaries_per_class);
    w.u64(s.confusion_pairs.size());
    for (const auto& p : s.confusion_pairs) {
        w.u64(p.target);
        w.u64(p.owner);
        write_optional(w, p.concept_id);
    }
    w.u8(s.integrity == Integrity::Half);
    w.u64(s.seed);
}

DatasetSpec read_spec(ByteReader& r) {
    DatasetSpec s;
    s.num_classes = r.u64();
    s.num_concepts = r.u64();
    s.grid = r.u64();
    s.patch_size = r.u64();
    s.train_per_class = r.u64();
    s.test_per_class = r.u64();
    s.noise = r.f64();
    s.secondary_inclusion = r.f64();
    s.confusion_inclusion = r.f64();
    s.secondaries_per_class = r.u64();
    const auto pairs = r.count(24);
    s.confusion_pairs.clear();
    for (std::size_t i = 0; i < pairs; ++i) {
        ConfusionPair p;
        p.target = r.u64();
        p.owner = r.u64();
        p.concept_id = read_optional(r);
        s.confusion_pairs.push_back(p);
    }
    const auto half = r.u8();
    if (half > 1) throw FormatError("bad integrity flag");
    s.integrity = half ? Integrity::Half : Integrity::Full;
    s.seed = r.u64();
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("stored spec is invalid: ") + e.what());
    }
    return s;
}

void write_sample(ByteWriter& w, const GridSample& s) {
    w.u64(s.label);
    w.u64(s.noise_seed);
    w.u64(s.image.rank() == 2 ? s.image.dim(0) : 0);
    w.u64(s.image.rank() == 2 ? s.image.dim(1) : 0);
    for (double v : s.image.data()) w.f64(v);
    w.u64(s.concepts.size());
    for (auto c : s.concepts) w.u8(c);
    w.u64(s.slot_map.size());
    for (int v : s.slot_map) w.i64(v);
}

GridSample read_sample(ByteReader& r, const DatasetSpec& spec) {
    GridSample s;
    s.label = r.u64();
    s.noise_seed = r.u64();
    const auto rows = r.u64();
    const auto cols = r.u64();
    if (rows != spec.image_side() || cols != spec.image_side()) throw FormatError("image size does not match the spec");
    std::vector<double> px(rows * cols);
    for (auto& v : px) v = r.f64();
    s.image = Tensor(Shape{rows, cols}, std::move(px));
    const auto k = r.count(1);
    if (k != spec.num_concepts) throw FormatError("concept vector length does not match the spec");
    s.concepts.resize(k);
    for (auto& c : s.concepts) {
        c = r.u8();
        if (c > 1) throw FormatError("concept vector is not binary");
    }
    const auto slots = r.count(8);
    if (slots != spec.grid * spec.grid) throw FormatError("slot map length does not match the spec");
    s.slot_map.resize(slots);
    for (auto& v : s.slot_map) {
        const auto x = r.i64();
        if (x < kEmptySlot || x >= static_cast<std::int64_t>(spec.num_concepts)) throw FormatError("slot map entry out of range");
        v = static_cast<int>(x);
    }
    if (s.label >= spec.num_classes) throw FormatError("sample label out of range");
    return s;
}

void write_section(ByteWriter& w, std::string_view tag, std::span<const GridSample> samples) {
    w.raw(tag);
    w.u64(samples.size());
    for (const auto& s : samples) write_sample(w, s);
}

std::vector<GridSample> read_section(ByteReader& r, std::string_view tag, const DatasetSpec& spec) {
    const auto got = r.raw(4);
    if (got != tag) throw FormatError("expected section " + std::string(tag) + ", found " + std::string(got));
    const auto n = r.count(32);
    std::vector<GridSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(read_sample(r, spec));
    return out;
}

void write_header(ByteWriter& w, std::uint8_t kind, const DatasetSpec& spec) {
    w.raw(kMagic);
    w.u8(kind);
    w.u32(kVersion);
    write_spec(w, spec);
}

DatasetSpec read_header(ByteReader& r, std::uint8_t kind) {
    if (r.remaining() < kMagic.size() || r.raw(kMagic.size()) != kMagic) throw FormatError("not a CGRD1 file");
    const auto got = r.u8();
    if (got != kind) throw FormatError(kind == kKindDataset ? "file holds a poisoned dataset" : "file holds a plain dataset");
    const auto version = r.u32();
    if (version != kVersion) throw FormatError("unsupported CGRD1 version " + std::to_string(version));
    return read_spec(r);
}

void finish(const ByteReader& r) {
    if (!r.done()) throw FormatError("trailing bytes after the last section");
}

}  // namespace

std::string encode_dataset(const Dataset& dataset) {
    ByteWriter w;
    write_header(w, kKindDataset, dataset.spec);
    write_section(w, "TRN ", dataset.train);
    write_section(w, "TST ", dataset.test);
    return w.take();
}

Dataset decode_dataset(const std::string& bytes) {
    ByteReader r(bytes);
    const DatasetSpec spec = read_header(r, kKindDataset);
    Dataset ds = dataset_skeleton(spec);
    ds.train = read_section(r, "TRN ", spec);
    ds.test = read_section(r, "TST ", spec);
    finish(r);
    return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    detail::write_file(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
    try {
        return decode_dataset(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string encode_poisoned(const PoisonedDataset& poisoned, const DatasetSpec& source) {
    if (poisoned.provenance.size() != poisoned.malicious.size()) {
        throw std::invalid_argument("encode_poisoned: provenance is not parallel to the malicious set");
    }
    ByteWriter w;
    write_header(w, kKindPoisoned, source);
    const PoisonPlan& p = poisoned.plan;
    w.raw("PLAN");
    w.u64(p.target_class);
    w.u64(p.target_primary);
    w.u8(static_cast<std::uint8_t>(p.mask));
    w.u8(static_cast<std::uint8_t>(p.labels));
    w.u8(p.integrity == Integrity::Half);
    write_optional(w, p.confusing_concept);
    write_optional(w, p.owner_class);
    w.u64(p.seed);
    write_section(w, "RET ", poisoned.retain);
    write_section(w, "MAL ", poisoned.malicious);
    w.raw("PROV");
    w.u64(poisoned.provenance.size());
    for (const auto& pr : poisoned.provenance) {
        w.u64(pr.original_index);
        w.u64(pr.original_label);
        w.u64(pr.new_label);
        w.u64(pr.masked.size());
        for (const auto& m : pr.masked) {
            w.u64(m.slot);
            w.i64(m.original_concept);
            w.u64(m.original_pixels.size());
            for (double v : m.original_pixels) w.f64(v);
        }
    }
    return w.take();
}

PoisonedFile decode_poisoned(const std::string& bytes) {
    ByteReader r(bytes);
    PoisonedFile f;
    f.spec = read_header(r, kKindPoisoned);
    if (r.raw(4) != "PLAN") throw FormatError("expected section PLAN");
    PoisonPlan& p = f.poisoned.plan;
    p.target_class = r.u64();
    p.target_primary = r.u64();
    const auto mask = r.u8();
    const auto labels = r.u8();
    const auto half = r.u8();
    if (mask > 2 || labels > 1 || half > 1) throw FormatError("bad poison plan enum");
    p.mask = static_cast<MaskMode>(mask);
    p.labels = static_cast<LabelStrategy>(labels);
    p.integrity = half ? Integrity::Half : Integrity::Full;
    p.confusing_concept = read_optional(r);
    p.owner_class = read_optional(r);
    p.seed = r.u64();
    try {
        p.validate(f.spec.num_classes);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("stored poison plan is invalid: ") + e.what());
    }
    f.poisoned.retain = read_section(r, "RET ", f.spec);
    f.poisoned.malicious = read_section(r, "MAL ", f.spec);
    if (r.raw(4) != "PROV") throw FormatError("expected section PROV");
    const auto n = r.count(32);
    if (n != f.poisoned.malicious.size()) throw FormatError("provenance count does not match the malicious set");
    const std::size_t slot_pixels = f.spec.patch_size * f.spec.patch_size;
    for (std::size_t i = 0; i < n; ++i) {
        Provenance pr;
        pr.original_index = r.u64();
        pr.original_label = r.u64();
        pr.new_label = r.u64();
        const auto k = r.count(24);
        for (std::size_t j = 0; j < k; ++j) {
            SlotPatch m;
            m.slot = r.u64();
            m.original_concept = static_cast<int>(r.i64());
            const auto px = r.count(8);
            if (px != slot_pixels || m.slot >= f.spec.grid * f.spec.grid) throw FormatError("provenance slot out of range");
            m.original_pixels.resize(px);
            for (auto& v : m.original_pixels) v = r.f64();
            pr.masked.push_back(std::move(m));
        }
        f.poisoned.provenance.push_back(std::move(pr));
    }
    finish(r);
    return f;
}

void save_poisoned(const PoisonedDataset& poisoned, const DatasetSpec& source, const std::filesystem::path& path) {
    detail::write_file(path, encode_poisoned(poisoned, source));
}

PoisonedFile load_poisoned(const std::filesystem::path& path) {
    try {
        return decode_poisoned(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace ulab
