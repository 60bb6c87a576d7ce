#include "tgt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tgt/errors.hpp"

namespace tgt {

namespace {

// Explicit little-endian encoding keeps the file format host-independent.
void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double d) {
    std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

struct Reader {
    std::istream& in;
    std::size_t offset = 0;

    void read_bytes(void* dst, std::size_t n) {
        in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw DataError("checkpoint truncated at byte " +
                            std::to_string(offset));
        offset += n;
    }
    std::uint32_t u32() {
        unsigned char b[4];
        read_bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) |
               (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }
    double f64() {
        unsigned char b[8];
        read_bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return std::bit_cast<double>(v);
    }
    std::string str(std::size_t n) {
        std::string s(n, '\0');
        read_bytes(s.data(), n);
        return s;
    }
    bool at_end() {
        return in.peek() == std::char_traits<char>::eof();
    }
};

void write_record(std::ostream& out, const std::string& name,
                  const std::vector<int>& shape,
                  const std::vector<double>& values) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : values) put_f64(out, v);
}

struct Record {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
};

Record read_record(Reader& r) {
    Record rec;
    const std::uint32_t name_len = r.u32();
    rec.name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint32_t d = r.u32();
        rec.shape.push_back(static_cast<int>(d));
        count *= d;
    }
    rec.values.resize(count);
    for (auto& v : rec.values) v = r.f64();
    return rec;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const Adam* adam, const CheckpointExtra* extra) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");

    const auto& params = model.parameters();
    out.write("TGT1", 4);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params)
        write_record(out, name, t.shape(), t.values());

    if (adam) {
        // Moment buffers may be unsized when no step ran yet; write zeros of
        // the right size so loading never depends on training history.
        std::uint32_t count = static_cast<std::uint32_t>(2 * params.size() + 1);
        if (extra) ++count;
        out.write("OPT1", 4);
        put_u32(out, count);
        auto moment_or_zeros = [&](const std::vector<std::vector<double>>& ms,
                                   std::size_t i) {
            const std::size_t want = params[i].second.size();
            if (i < ms.size() && ms[i].size() == want) return ms[i];
            return std::vector<double>(want, 0.0);
        };
        for (std::size_t i = 0; i < params.size(); ++i)
            write_record(out, "adam.m." + params[i].first,
                         params[i].second.shape(),
                         moment_or_zeros(adam->first_moments(), i));
        for (std::size_t i = 0; i < params.size(); ++i)
            write_record(out, "adam.v." + params[i].first,
                         params[i].second.shape(),
                         moment_or_zeros(adam->second_moments(), i));
        write_record(out, "adam.step", {1},
                     {static_cast<double>(adam->step_count())});
        if (extra)
            write_record(out, "train.next_epoch", {1},
                         {static_cast<double>(extra->next_epoch)});
    }
    out.flush();
    if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

void load_checkpoint(const std::string& path, Model& model, Adam* adam,
                     CheckpointExtra* extra) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint '" + path + "'");
    Reader r{in};

    char magic[4];
    r.read_bytes(magic, 4);
    if (std::memcmp(magic, "TGT1", 4) != 0)
        throw DataError("'" + path + "' is not a checkpoint (bad magic)");

    auto& params = model.parameters();
    const std::uint32_t count = r.u32();
    if (count != params.size())
        throw DataError("checkpoint has " + std::to_string(count) +
                        " parameters, this model has " +
                        std::to_string(params.size()));
    for (std::uint32_t i = 0; i < count; ++i) {
        Record rec = read_record(r);
        auto& [name, t] = params[i];
        if (rec.name != name)
            throw DataError("checkpoint parameter '" + rec.name +
                            "' where '" + name + "' was expected");
        if (rec.shape != t.shape())
            throw DataError("parameter '" + name + "' has shape " +
                            shape_string(rec.shape) + " in the checkpoint, " +
                            shape_string(t.shape()) + " in the model");
        t.values() = std::move(rec.values);
    }

    if (!adam) return;
    if (r.at_end())
        throw DataError("checkpoint '" + path +
                        "' carries no optimizer state");
    char sentinel[4];
    r.read_bytes(sentinel, 4);
    if (std::memcmp(sentinel, "OPT1", 4) != 0)
        throw DataError("optimizer section has a bad sentinel");
    adam->ensure_buffers(params);
    const std::uint32_t opt_count = r.u32();
    for (std::uint32_t i = 0; i < opt_count; ++i) {
        Record rec = read_record(r);
        if (rec.name == "adam.step") {
            adam->set_step_count(static_cast<std::int64_t>(rec.values.at(0)));
            continue;
        }
        if (rec.name == "train.next_epoch") {
            if (extra)
                extra->next_epoch =
                    static_cast<std::int64_t>(rec.values.at(0));
            continue;
        }
        bool matched = false;
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            const bool is_m = rec.name == "adam.m." + params[pi].first;
            const bool is_v = rec.name == "adam.v." + params[pi].first;
            if (!is_m && !is_v) continue;
            if (rec.values.size() != params[pi].second.size())
                throw DataError("optimizer record '" + rec.name +
                                "' has the wrong size");
            (is_m ? adam->first_moments()
                  : adam->second_moments())[pi] = std::move(rec.values);
            matched = true;
            break;
        }
        if (!matched)
            throw DataError("unknown optimizer record '" + rec.name + "'");
    }
}

}  // namespace tgt
