#include "doctest.h"
#include "fixtures.hpp"

#include "lhsim/dataset.hpp"
#include "lhsim/error.hpp"
#include "lhsim/haze.hpp"
#include "lhsim/io.hpp"

#include <fstream>
#include <set>

using namespace lhsim;
using lhsim::test::TempDir;
namespace fs = std::filesystem;

namespace {

Manifest synthetic_manifest(std::size_t n) {
    Manifest m;
    m.entries.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.entries[i].id = "img_" + std::to_string(i);
    return m;
}

std::string file_bytes(const fs::path& p) {
    const auto b = read_file_bytes(p);
    return {b.begin(), b.end()};
}

GenerationConfig noiseless_config() {
    GenerationConfig cfg;
    cfg.overrides.sigma_s = 0.0;
    cfg.overrides.sigma_c = 0.0;
    cfg.strict = false;
    return cfg;
}

} // namespace

TEST_SUITE("dataset") {
    TEST_CASE("train_count and split") {
        CHECK(train_count(8970, 0.9) == 8073);
        CHECK(train_count(10, 0.9) == 9);

        const Manifest big = split_dataset(synthetic_manifest(8970), 0.9, 1);
        CHECK(big.count(Split::train) == 8073);
        CHECK(big.count(Split::test) == 897);

        const Manifest a = split_dataset(synthetic_manifest(100), 0.9, 5);
        const Manifest b = split_dataset(synthetic_manifest(100), 0.9, 5);
        const Manifest c = split_dataset(synthetic_manifest(100), 0.9, 6);
        bool same = true, differs = false;
        for (std::size_t i = 0; i < 100; ++i) {
            same = same && a.entries[i].split == b.entries[i].split;
            differs = differs || a.entries[i].split != c.entries[i].split;
        }
        CHECK(same);
        CHECK(differs);
        CHECK_THROWS_AS(split_dataset(synthetic_manifest(10), 1.0, 1), InvalidArgument);
        CHECK_THROWS_AS(split_dataset(Manifest{}, 0.9, 1), InvalidArgument);
    }

    TEST_CASE("group names") {
        CHECK(group_name(Group::low_light_hazy) == "I_HL");
        CHECK(group_from_name("I_H") == Group::haze_only);
        CHECK_THROWS_AS(group_from_name("J"), InvalidArgument);
        CHECK(split_from_string(to_string(Split::test)) == Split::test);
    }

    TEST_CASE("collect_inputs") {
        TempDir dir("ds");
        lhsim::test::write_scenes(dir / "imgs", 3, 16, 12);
        fs::create_directories(dir / "depth");
        save_image(Image(16, 12, 0.5), dir / "depth" / "scene_01.png");
        std::ofstream(dir / "imgs" / "notes.txt") << "x";

        const auto items = collect_inputs(dir / "imgs", dir / "depth");
        REQUIRE(items.size() == 3);
        CHECK(items[0].image.filename() == "scene_00.png");
        CHECK_FALSE(items[0].depth.has_value());
        CHECK(items[1].depth.has_value());
        CHECK_THROWS_AS(collect_inputs(dir / "nope"), IoError);
    }

    TEST_CASE("generate: layout, determinism, and manifest contents") {
        TempDir dir("ds");
        lhsim::test::write_scenes(dir / "imgs", 10, 24, 16);
        GenerationConfig cfg;
        const Manifest m1 = generate_dataset(collect_inputs(dir / "imgs"), cfg, 7, dir / "a");
        const Manifest m2 = generate_dataset(collect_inputs(dir / "imgs"), cfg, 7, dir / "b");
        REQUIRE(m1.entries.size() == 10);
        CHECK(m1.count(Split::train) == 9);

        std::size_t pngs = 0;
        for (Group g : kAllGroups)
            for (const auto& f : fs::directory_iterator(dir / "a" / group_name(g))) pngs += f.path().extension() == ".png";
        CHECK(pngs == 40);

        CHECK(file_bytes(dir / "a" / "manifest.json") == file_bytes(dir / "b" / "manifest.json"));
        for (const auto& e : m1.entries)
            for (Group g : kAllGroups) CHECK(file_bytes(dir / "a" / e.file(g)) == file_bytes(dir / "b" / e.file(g)));

        const Manifest other = generate_dataset(collect_inputs(dir / "imgs"), cfg, 8, dir / "c");
        CHECK(other.entries[0].hash(Group::low_light_hazy) != m1.entries[0].hash(Group::low_light_hazy));
        // the clean copy does not depend on the seed
        CHECK(other.entries[0].hash(Group::clean) == m1.entries[0].hash(Group::clean));

        const Manifest back = read_manifest(dir / "a" / "manifest.json");
        CHECK(manifest_dump(back) == manifest_dump(m1));
        const auto& e = back.entries[3];
        CHECK(e.params.seed == derive_seed(7, e.id));
        CHECK(e.params.alpha >= 0.9);
        CHECK(e.depth.kind == DepthSource::Kind::vertical_gradient);
        CHECK(back.config.contains("split_ratio"));
        CHECK(back.rng == "philox4x32-10/v1");
    }

    TEST_CASE("generate: output does not depend on worker count") {
        TempDir dir("ds");
        lhsim::test::write_scenes(dir / "imgs", 6, 20, 14);
        GenerationConfig one;
        GenerationConfig four;
        four.jobs = 4;
        generate_dataset(collect_inputs(dir / "imgs"), one, 3, dir / "a");
        generate_dataset(collect_inputs(dir / "imgs"), four, 3, dir / "b");
        CHECK(file_bytes(dir / "a" / "manifest.json") == file_bytes(dir / "b" / "manifest.json"));
    }

    TEST_CASE("generate: duplicate stems, depth files and unreadable inputs") {
        TempDir dir("ds");
        lhsim::test::write_scenes(dir / "x", 1, 16, 12);
        lhsim::test::write_scenes(dir / "y", 1, 16, 12);
        save_image(Image(16, 12, 0.2), dir / "d.png");
        std::vector<InputItem> items{{dir / "x" / "scene_00.png", dir / "d.png"}, {dir / "y" / "scene_00.png", {}}};
        const Manifest m = generate_dataset(items, GenerationConfig{}, 1, dir / "out");
        REQUIRE(m.entries.size() == 2);
        CHECK(m.entries[0].id == "scene_00");
        CHECK(m.entries[1].id == "scene_00_1");
        CHECK(m.entries[0].depth.kind == DepthSource::Kind::file);

        std::ofstream(dir / "x" / "broken.png") << "not a png";
        items.push_back({dir / "x" / "broken.png", {}});
        CHECK_THROWS_AS(generate_dataset(items, GenerationConfig{}, 1, dir / "out2"), IoError);
        GenerationConfig skip;
        skip.skip_unreadable = true;
        std::vector<std::string> warnings;
        const Manifest partial = generate_dataset(items, skip, 1, dir / "out3", &warnings);
        CHECK(partial.entries.size() == 2);
        CHECK(warnings.size() == 1);
    }

    TEST_CASE("generate: float sidecars reproduce the simulation exactly") {
        TempDir dir("ds");
        lhsim::test::write_scenes(dir / "imgs", 2, 20, 16);
        GenerationConfig cfg = noiseless_config();
        cfg.float_sidecars = true;
        const Manifest m = generate_dataset(collect_inputs(dir / "imgs"), cfg, 4, dir / "out");
        const auto& e = m.entries[0];
        REQUIRE(e.sidecars.size() == 5);
        const SimulationResult r = resimulate_entry(e, m);
        CHECK(image_from_float_raster(read_float_raster(dir / "out" / e.sidecars.at("I_HL"))) == r.low_light_hazy);
        CHECK(transmission_from_float_raster(read_float_raster(dir / "out" / e.sidecars.at("t"))) == r.transmission);
    }

    TEST_CASE("verify: clean, missing file, tampered byte, resimulation") {
        TempDir dir("ds");
        lhsim::test::write_scenes(dir / "imgs", 4, 20, 16);
        const Manifest m = generate_dataset(collect_inputs(dir / "imgs"), GenerationConfig{}, 11, dir / "out");
        const fs::path root = dir / "out";

        CHECK(verify_manifest(m, root, {true, true}).ok());

        fs::remove(root / m.entries[1].file(Group::low_light));
        const VerifyReport missing = verify_manifest(m, root);
        REQUIRE(missing.failures.size() == 1);
        CHECK(missing.failures[0].kind == "missing_file");
        CHECK(missing.failures[0].id == m.entries[1].id);

        TempDir dir2("ds");
        lhsim::test::write_scenes(dir2 / "imgs", 4, 20, 16);
        const Manifest m2 = generate_dataset(collect_inputs(dir2 / "imgs"), GenerationConfig{}, 11, dir2 / "out");
        const fs::path target = dir2 / "out" / m2.entries[2].file(Group::haze_only);
        auto bytes = read_file_bytes(target);
        bytes[bytes.size() / 2] ^= 0x5A;
        write_file_bytes(target, bytes);
        const VerifyReport tampered = verify_manifest(m2, dir2 / "out", {true, false});
        REQUIRE(tampered.failures.size() == 1);
        CHECK(tampered.failures[0].kind == "hash_mismatch");

        Manifest edited = m2;
        edited.entries[0].params.gamma += 0.01;
        bool found = false;
        for (const auto& f : verify_manifest(edited, dir2 / "out", {false, true}).failures)
            found = found || (f.kind == "resimulation_mismatch" && f.id == edited.entries[0].id);
        CHECK(found);

        Manifest bad_split = m2;
        bad_split.entries[0].split = bad_split.entries[0].split == Split::train ? Split::test : Split::train;
        bool split_failure = false;
        for (const auto& f : verify_manifest(bad_split, dir2 / "out").failures) split_failure |= f.kind == "split_count";
        CHECK(split_failure);
    }

    TEST_CASE("manifest json rejects bad documents") {
        CHECK_THROWS_AS(manifest_from_json(nlohmann::json::object()), InvalidArgument);
        nlohmann::json j = manifest_to_json(Manifest{});
        j["schema"] = "something.else";
        CHECK_THROWS_AS(manifest_from_json(j), InvalidArgument);
        TempDir dir("ds");
        std::ofstream(dir / "m.json") << "{ not json";
        CHECK_THROWS_AS(read_manifest(dir / "m.json"), InvalidArgument);
        CHECK_THROWS_AS(read_manifest(dir / "absent.json"), IoError);
    }

    TEST_CASE("augment") {
        const Image img = lhsim::test::smooth_scene(48, 40, 1);
        CHECK(augment(img, {0.0, false}) == img);
        CHECK(augment(augment(img, {0.0, true}), {0.0, true}) == img);
        const Image flipped = augment(img, {0.0, true});
        CHECK(flipped.at(0, 5, 1) == img.at(47, 5, 1));

        const Image back = augment(augment(img, {10.0, false}), {-10.0, false});
        // compare away from the borders, where rotation clamps coordinates
        double sum = 0;
        int n = 0;
        for (int y = 8; y < 32; ++y)
            for (int x = 8; x < 40; ++x)
                for (int c = 0; c < 3; ++c, ++n) sum += std::abs(back.at(x, y, c) - img.at(x, y, c));
        CHECK(sum / n <= 0.02);

        CHECK_THROWS_AS(augment(img, {12.0, false}), InvalidArgument);
        CHECK_NOTHROW(augment(img, {12.0, false}, false));

        Rng r(3);
        for (int i = 0; i < 1000; ++i) {
            const AugmentSpec s = sample_augment(r);
            REQUIRE(std::abs(s.rotation_deg) <= 10.0);
        }
    }

    TEST_CASE("augment rotation direction") {
        // a bright dot right of center moves up (smaller y) under a positive rotation
        Image img(41, 41, 0.0);
        for (int c = 0; c < 3; ++c) img.at(35, 20, c) = 1.0;
        const Image rot = augment(img, {10.0, false});
        double best = -1;
        int by = 0;
        for (int y = 0; y < 41; ++y)
            for (int x = 0; x < 41; ++x)
                if (rot.at(x, y, 0) > best) {
                    best = rot.at(x, y, 0);
                    by = y;
                }
        CHECK(by < 20);
    }
}
