#include "doctest.h"
#include "fixtures.hpp"
#include "ssim_reference.hpp"

#include "lhsim/error.hpp"
#include "lhsim/metrics.hpp"

#include <cmath>
#include <limits>

using namespace lhsim;

namespace {

Image offset(const Image& img, double d) {
    Image out = img;
    for (double& v : out.data()) v += d;
    return out;
}

} // namespace

TEST_SUITE("metrics") {
    TEST_CASE("l1 and l2") {
        const Image a = lhsim::test::smooth_scene(20, 10, 0, 0.1, 0.8);
        const Image b = offset(a, 0.1);
        CHECK(l1(a, a) == 0.0);
        CHECK(l1(a, b) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(l1(a, b) == l1(b, a));
        CHECK(l2(a, a) == 0.0);
        CHECK(l2(a, b) == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(l2(a, lhsim::test::hashed_image(20, 10)) >= 0.0);
        CHECK_THROWS_AS(l1(a, Image(10, 20)), InvalidArgument);
    }

    TEST_CASE("gradient loss") {
        const Image a = lhsim::test::hashed_image(12, 9);
        CHECK(gradient_loss(a, a) == 0.0);
        CHECK(gradient_loss(offset(a, 0.1), a) == doctest::Approx(0.0).epsilon(1e-12));

        // 2 px wide, 1 px tall: horizontal differences 0.2 apart, no vertical term
        Image p(2, 1, std::vector<double>{0.1, 0.1, 0.1, 0.5, 0.5, 0.5});
        Image r(2, 1, std::vector<double>{0.1, 0.1, 0.1, 0.3, 0.3, 0.3});
        CHECK(gradient_loss(p, r) == doctest::Approx(0.2).epsilon(1e-12));
        CHECK_THROWS_AS(gradient_loss(Image(1, 1), Image(1, 1)), InvalidArgument);
    }

    TEST_CASE("gradient loss hand case on 2x2") {
        // channel 0 only differs: pred has a horizontal step of 0.4 on row 0
        Image p(2, 2, 0.5);
        Image r(2, 2, 0.5);
        p.at(1, 0, 0) = 0.9;
        // horizontal: one differing difference (0.4) out of 1*2*3 = 6 -> 0.4/6
        // vertical: at x=1, d = 0.5 - 0.9 = -0.4 out of 2*1*3 = 6 -> 0.4/6
        CHECK(gradient_loss(p, r) == doctest::Approx(0.8 / 6.0).epsilon(1e-14));
    }

    TEST_CASE("exposure loss") {
        const ExposureConfig cfg{0.6, 16};
        CHECK(exposure_loss(Image(32, 32, 0.6), cfg) == doctest::Approx(0.0).epsilon(1e-15));
        for (double c : {0.2, 0.6, 0.9}) {
            CHECK(std::abs(exposure_loss(Image(48, 32, c), cfg) - std::abs(c - 0.6)) <= 1e-12);
        }
        Image two(32, 16, 0.2);
        for (int y = 0; y < 16; ++y)
            for (int x = 16; x < 32; ++x)
                for (int c = 0; c < 3; ++c) two.at(x, y, c) = 0.8;
        CHECK(std::abs(exposure_loss(two, cfg) - 0.3) <= 1e-12);

        // partial patches at the right and bottom edges are ignored
        Image partial(20, 17, 0.6);
        for (int y = 0; y < 17; ++y)
            for (int c = 0; c < 3; ++c) partial.at(19, y, c) = 0.0;
        CHECK(exposure_loss(partial, cfg) == doctest::Approx(0.0).epsilon(1e-15));

        CHECK_THROWS_AS(exposure_loss(Image(8, 8, 0.5), cfg), InvalidArgument);
        CHECK_THROWS_AS(exposure_loss(Image(32, 32), {1.0, 16}), InvalidArgument);
        CHECK_THROWS_AS(exposure_loss(Image(32, 32), {0.5, 0}), InvalidArgument);
    }

    TEST_CASE("dehaze and enhance loss") {
        const Image a = lhsim::test::smooth_scene(32, 32, 1, 0.1, 0.8);
        CHECK(dehaze_loss(a, a) == 0.0);
        CHECK(dehaze_loss(offset(a, 0.1), a) == doctest::Approx(0.11).epsilon(1e-11));
        const Image b = lhsim::test::hashed_image(32, 32);
        CHECK(dehaze_loss(a, b) >= l1(a, b));

        CHECK(enhance_loss(Image(32, 32, 0.6), Image(32, 32, 0.6)) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(enhance_loss(Image(32, 32, 0.4), Image(32, 32, 0.4)) == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(enhance_loss(a, b) != doctest::Approx(enhance_loss(b, a)));
    }

    TEST_CASE("path invariance loss") {
        const Image a = lhsim::test::smooth_scene(16, 16, 0, 0.1, 0.8);
        CHECK(path_invariance_loss(a, a) == 0.0);
        CHECK(path_invariance_loss(a, offset(a, 0.05)) == doctest::Approx(0.05).epsilon(1e-12));
        const Image b = lhsim::test::hashed_image(16, 16);
        CHECK(path_invariance_loss(a, b) == path_invariance_loss(b, a));
    }

    TEST_CASE("total loss") {
        CHECK(total_loss({}) == 0.0);
        CHECK(std::abs(total_loss({1, 1, 1, 1, 1}) - 9.4) <= 1e-12);
        const double base = total_loss({1, 1, 1, 1, 1});
        CHECK(std::abs(total_loss({3, 1, 1, 1, 1}) - (base + 2 * 0.2)) <= 1e-12);
        CHECK(std::abs(total_loss({1, 1, 1, 1, 3}) - (base + 2 * 5.0)) <= 1e-12);
        CHECK_THROWS_AS(total_loss({1, 1, 1, 1, 1}, {-1, 1, 1, 1, 1}), InvalidArgument);
    }

    TEST_CASE("psnr") {
        const Image a = lhsim::test::smooth_scene(20, 20, 0, 0.1, 0.8);
        CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
        CHECK(std::abs(psnr(offset(a, 0.1), a) - 20.0) <= 1e-9);
        CHECK(psnr(offset(a, 0.05), a) - psnr(offset(a, 0.1), a) == doctest::Approx(6.020599913279624).epsilon(1e-9));
        CHECK(json_number(psnr(a, a)) == "inf");
        CHECK(number_from_json(json_number(psnr(a, a))) == std::numeric_limits<double>::infinity());
    }

    TEST_CASE("ssim taps") {
        const auto taps = ssim_gaussian_taps();
        double sum = 0.0;
        for (double t : taps) sum += t;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(taps[5] > taps[4]);
        CHECK(taps[0] == doctest::Approx(taps[10]).epsilon(1e-15));
    }

    TEST_CASE("ssim identities") {
        const Image a = lhsim::test::smooth_scene(40, 30, 3);
        const Image b = lhsim::test::hashed_image(40, 30);
        CHECK(std::abs(ssim(a, a) - 1.0) <= 1e-9);
        CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-12);
        CHECK(ssim(a, b) <= 1.0);
        CHECK(ssim(a, b) >= -1.0);
        CHECK_THROWS_AS(ssim(Image(10, 20), Image(10, 20)), InvalidArgument);
    }

    TEST_CASE("ssim against frozen scikit-image values") {
        const auto fixtures = lhsim::test::ssim_fixtures();
        for (std::size_t i = 0; i < fixtures.size(); ++i) {
            CAPTURE(i);
            CHECK(std::abs(ssim(fixtures[i].a, fixtures[i].b) - fixtures[i].expected) <= 1e-4);
        }
        // x vs 1 - x on a mid-contrast gradient is strongly dissimilar
        CHECK(ssim(fixtures[0].a, fixtures[0].b) < 0.5);
    }

    TEST_CASE("ssim against the direct 2-D reference") {
        const auto fixtures = lhsim::test::ssim_fixtures();
        for (const auto& f : fixtures) {
            CHECK(std::abs(ssim(f.a, f.b) - lhsim::test::reference_ssim(f.a, f.b)) <= 1e-10);
        }
        const Image a = lhsim::test::hashed_image(23, 17, 1);
        const Image b = lhsim::test::hashed_image(23, 17, 2);
        CHECK(std::abs(ssim(a, b) - lhsim::test::reference_ssim(a, b)) <= 1e-10);
    }

    TEST_CASE("compute_metrics and json schema") {
        const Image a = lhsim::test::smooth_scene(32, 32, 0);
        const Image b = lhsim::test::smooth_scene(32, 32, 1);
        const ImageMetrics m = compute_metrics(a, b);
        CHECK(m.psnr_db == psnr(a, b));
        CHECK(m.l_exp == exposure_loss(a));
        const auto j = metrics_to_json(m);
        for (const char* key : {"psnr_db", "ssim", "l1", "l2", "grad_l1", "l_exp"}) CHECK(j.contains(key));
    }
}
