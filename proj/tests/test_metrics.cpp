#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "ngt/metrics.hpp"
#include "ngt/noise.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace ngt;

TEST_CASE("mse: identity, constant offset, oracle agreement") {
    const Image img = test::random_image(16, 16, 1);
    CHECK(mse(img, img) == 0.0);

    Image a(8, 8, 100.0f / 255.0f), b(8, 8, 102.0f / 255.0f);
    CHECK(mse(a, b) == doctest::Approx(4.0).epsilon(1e-5));

    for (int i = 0; i < 5; ++i) {
        const Image x = test::random_image(32, 32, 10 + i);
        const Image y = test::random_image(32, 32, 20 + i);
        CHECK(mse(x, y) == doctest::Approx(test::naive_mse(x, y)).epsilon(1e-9));
    }
    CHECK_THROWS(mse(a, Image(4, 8)));
}

TEST_CASE("psnr: pole, zero dB, and the MSE=1 anchor") {
    const Image img = test::random_image(8, 8, 2);
    CHECK(std::isinf(psnr(img, img)));
    CHECK(psnr(img, img) > 0);

    const Image black(8, 8, 0.0f), white(8, 8, 1.0f);
    CHECK(psnr(black, white) == doctest::Approx(0.0).epsilon(1e-9));

    Image ref(8, 8, 0.0f), test1(8, 8, 1.0f / 255.0f);
    CHECK(psnr(ref, test1) == doctest::Approx(48.1308).epsilon(1e-3 / 48.0));
}

TEST_CASE("psnr is exactly 10 log10(255^2 / mse) on the shared path") {
    const Image x = test::random_image(24, 24, 3);
    const Image y = test::random_image(24, 24, 4);
    const double m = mse(x, y);
    CHECK(psnr(x, y) == 10.0 * std::log10(255.0 * 255.0 / m));
}

TEST_CASE("ssim: identity, anticorrelation, oracle agreement") {
    const Image img = test::phantom_image(32, 32, 5);
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));

    // binary checkerboard vs its inverse: strong anticorrelation
    Image cb(16, 16), inv(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = ((y / 4 + x / 4) % 2 == 0) ? 1.0f : 0.0f;
                cb.at(y, x, c) = v;
                inv.at(y, x, c) = 1.0f - v;
            }
    CHECK(ssim(cb, inv) < 0.0);

    for (int i = 0; i < 5; ++i) {
        const Image a = test::random_image(64, 64, 30 + i);
        const Image b = test::random_image(64, 64, 40 + i);
        CHECK(ssim(a, b) == doctest::Approx(test::naive_ssim(a, b)).epsilon(1e-6));
    }
    CHECK_THROWS(ssim(Image(8, 8), Image(8, 8)));  // below the 11x11 window
}

TEST_CASE("delta_e: identity, black-white anchor, symmetry") {
    const Image img = test::random_image(12, 12, 6);
    CHECK(delta_e(img, img) == 0.0);

    const Image black(8, 8, 0.0f), white(8, 8, 1.0f);
    CHECK(delta_e(black, white) == doctest::Approx(100.0).epsilon(0.001));

    const Image a = test::random_image(16, 16, 7);
    const Image b = test::random_image(16, 16, 8);
    CHECK(delta_e(a, b) == doctest::Approx(delta_e(b, a)).epsilon(1e-12));
}

TEST_CASE("vifp: self-fidelity, degradation, blur ordering, oracle") {
    const Image img = test::phantom_image(64, 64, 9);
    CHECK(vifp(img, img) == doctest::Approx(1.0).epsilon(1e-6));

    // additive noise lands strictly inside (0, 1)
    NoiseSpec spec;
    spec.sigma8 = 50.0;
    spec.seed = 3;
    const Image noisy = apply_gaussian(img, sample_noise(64, 64, spec));
    const double v_noisy = vifp(img, noisy);
    CHECK(v_noisy > 0.0);
    CHECK(v_noisy < 1.0);

    // box blur loses information
    Image blurred(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 3; ++c) {
                double sum = 0.0;
                int count = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= 64 || xx < 0 || xx >= 64) continue;
                        sum += img.at(yy, xx, c);
                        ++count;
                    }
                blurred.at(y, x, c) = static_cast<float>(sum / count);
            }
    CHECK(vifp(img, blurred) < vifp(img, img));

    for (int i = 0; i < 3; ++i) {
        const Image a = test::phantom_image(64, 64, 50 + i);
        NoiseSpec s2;
        s2.sigma8 = 20.0 + 10 * i;
        s2.seed = 60 + i;
        const Image b = apply_gaussian(a, sample_noise(64, 64, s2));
        CHECK(vifp(a, b) == doctest::Approx(test::naive_vifp(a, b)).epsilon(1e-4));
    }
    CHECK_THROWS(vifp(Image(16, 16), Image(16, 16)));  // below the 4-scale minimum
}

TEST_CASE("vifp is reference-directional") {
    const Image img = test::phantom_image(64, 64, 70);
    NoiseSpec spec;
    spec.sigma8 = 40.0;
    spec.seed = 71;
    const Image noisy = apply_gaussian(img, sample_noise(64, 64, spec));
    CHECK(vifp(img, noisy) != doctest::Approx(vifp(noisy, img)).epsilon(1e-6));
}

TEST_CASE("mse monotone in constant perturbation size") {
    const Image base(16, 16, 0.4f);
    double prev = -1.0;
    for (float delta : {0.0f, 0.05f, 0.1f, 0.2f, 0.4f}) {
        Image moved(16, 16, 0.4f + delta);
        const double m = mse(base, moved);
        CHECK(m >= prev);
        prev = m;
    }
}

TEST_CASE("evaluate_dirs: identity rows, manifest metadata, unmatched error") {
    test::TempDir ref_dir("ref");
    test::TempDir test_dir("test");
    for (int i = 0; i < 3; ++i) {
        const Image img = test::phantom_image(48, 48, 100 + i);
        const std::string name = "img" + std::to_string(i) + ".png";
        save_png(img, ref_dir.path() / name);
        save_png(img, test_dir.path() / name);
    }
    {
        std::ofstream manifest(test_dir.path() / "manifest.txt");
        manifest << "# name pattern sigma seed\n";
        manifest << "img0 gaussian 25 7\n";
        manifest << "img1 speckle 50 8\n";
    }
    const MetricReport report = evaluate_dirs(ref_dir.path(), test_dir.path());
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        CHECK(row.mse == 0.0);
        CHECK(row.ssim == doctest::Approx(1.0));
        CHECK(row.delta_e == 0.0);
        CHECK(std::isinf(row.psnr));
    }
    CHECK(report.rows[0].pattern == "gaussian");
    CHECK(report.rows[0].sigma == 25.0);
    CHECK(report.rows[1].pattern == "speckle");
    CHECK(report.rows[2].pattern == "-");

    save_png(test::phantom_image(48, 48, 1), test_dir.path() / "extra.png");
    CHECK_THROWS_WITH_AS(evaluate_dirs(ref_dir.path(), test_dir.path()),
                         doctest::Contains("extra.png"), std::runtime_error);
}

TEST_CASE("report csv: format, round trip, aggregate") {
    test::TempDir dir("csv");
    MetricReport report;
    report.rows.push_back({"a.png", "gaussian", 25.0, 30.1234, 0.9456, 1.23, 0.55, 62.9876});
    report.rows.push_back({"b.png", "speckle", 50.0,
                           std::numeric_limits<double>::infinity(), 1.0, 0.0, 1.0, 0.0});
    const auto path = dir.path() / "report.csv";
    report.write_csv(path);

    // header and inf spelling
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "image,pattern,sigma,psnr,ssim,delta_e,vifp,mse");
    std::string second, third;
    std::getline(in, second);
    std::getline(in, third);
    CHECK(third.find("inf") != std::string::npos);
    CHECK(second.find("30.1234") != std::string::npos);

    const MetricReport back = MetricReport::read_csv(path);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0].psnr == doctest::Approx(30.1234));
    CHECK(back.rows[0].ssim == doctest::Approx(0.9456));
    CHECK(std::isinf(back.rows[1].psnr));

    // aggregate means equal the arithmetic means of the finite columns
    MetricReport finite;
    finite.rows.push_back({"x", "-", 0, 10.0, 0.5, 1.0, 0.25, 100.0});
    finite.rows.push_back({"y", "-", 0, 20.0, 0.7, 3.0, 0.75, 200.0});
    const MetricRow mean = finite.aggregate();
    CHECK(mean.psnr == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(mean.ssim == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(mean.delta_e == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(mean.vifp == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(mean.mse == doctest::Approx(150.0).epsilon(1e-9));
}
