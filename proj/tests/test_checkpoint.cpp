#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "crossfuse/checkpoint.hpp"
#include "crossfuse/errors.hpp"
#include "oracles.hpp"

using namespace crossfuse;

namespace {

// Independent FNV-1a 64 over the bytes.
std::uint64_t fnv(const std::vector<std::uint8_t>& b, std::size_t n)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void reseal(std::vector<std::uint8_t>& b)
{
    const std::uint64_t h = fnv(b, b.size() - 8);
    for (int i = 0; i < 8; ++i) {
        b[b.size() - 8 + i] = static_cast<std::uint8_t>(h >> (8 * i));
    }
}

FusionNetwork trained_like(FusionMode mode, std::uint64_t seed)
{
    RngState rng(seed);
    FusionNetwork net = build_network(mode, Modality::rgb, default_spec(2, 2), rng);
    if (CrossFusionParams* c = net.cross()) {
        c->a_at(3) = 0.125;
        c->b_at(20) = -1e-300;
    }
    net.metadata()["val_maxf"] = "0.97";
    net.metadata()["seed"] = std::to_string(seed);
    return net;
}

}  // namespace

TEST_CASE("checksum helper agrees with the reference")
{
    const std::vector<std::uint8_t> b{'a', 'b', 'c'};
    CHECK(fnv1a64(b) == fnv(b, 3));
    CHECK(fnv1a64(std::vector<std::uint8_t>{}) == 0xcbf29ce484222325ULL);
}

TEST_CASE("save, load, save is bit-exact for every mode")
{
    for (FusionMode mode : {FusionMode::single, FusionMode::early, FusionMode::late, FusionMode::cross}) {
        CAPTURE(to_string(mode));
        const FusionNetwork net = trained_like(mode, 3);
        const auto bytes = serialize(net);
        CHECK(std::memcmp(bytes.data(), "XFCKPT01", 8) == 0);
        const FusionNetwork back = deserialize(bytes);
        CHECK(back.mode() == mode);
        if (mode == FusionMode::single) {
            CHECK(back.modality() == Modality::rgb);
        }
        CHECK(back.spec() == net.spec());
        CHECK(back.metadata() == net.metadata());
        CHECK(serialize(back) == bytes);

        RngState rng(1);
        const Tensor x = oracle::random_tensor(Shape{1, 3, 8, 16}, rng);
        FusionNetwork a = net;
        FusionNetwork b = back;
        CHECK(a.forward({&x, &x}, false, rng).values() == b.forward({&x, &x}, false, rng).values());
    }
}

TEST_CASE("file round trip")
{
    const auto dir = std::filesystem::temp_directory_path() / "crossfuse_ckpt_test";
    std::filesystem::create_directories(dir);
    const FusionNetwork net = trained_like(FusionMode::cross, 4);
    save_checkpoint(net, dir / "m.ckpt");
    CHECK(serialize(load_checkpoint(dir / "m.ckpt")) == serialize(net));
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("corruption is detected")
{
    const auto bytes = serialize(trained_like(FusionMode::single, 5));
    for (std::size_t pos : {std::size_t{9}, bytes.size() / 2, bytes.size() - 9, bytes.size() - 1}) {
        auto bad = bytes;
        bad[pos] ^= 0x10;
        CAPTURE(pos);
        CHECK_THROWS_AS(deserialize(bad), ChecksumError);
    }
    auto truncated = bytes;
    truncated.resize(bytes.size() - 100);
    CHECK_THROWS_AS(deserialize(truncated), ChecksumError);
    CHECK_THROWS_AS(deserialize(std::vector<std::uint8_t>(4, 0)), ChecksumError);
}

TEST_CASE("unknown version is rejected even with a valid checksum")
{
    auto bytes = serialize(trained_like(FusionMode::single, 6));
    bytes[8] = 2;
    reseal(bytes);
    CHECK_THROWS_AS(deserialize(bytes), VersionError);
}

TEST_CASE("spec JSON round trip")
{
    NetworkSpec s = default_spec(5, 3);
    s.layer(2).kernel_w = 5;
    s.layer(2).pad_w = 2;
    CHECK(spec_from_json(spec_to_json(s)) == s);
    CHECK_THROWS(spec_from_json("{"));
}
