#include <doctest.h>

#include <cmath>
#include <numbers>

#include "loosectl/error.hpp"
#include "loosectl/obb.hpp"
#include "loosectl/rng.hpp"

using namespace lc;

namespace {

constexpr double kPi = std::numbers::pi;

PointCloud random_cloud(Rng& rng, int n) {
    PointCloud c;
    const double yaw = rng.uniform(0, kPi);
    const Vec3 scale(rng.uniform(0.2, 3), rng.uniform(0.2, 2), rng.uniform(0.2, 3));
    for (int i = 0; i < n; ++i) {
        const Vec3 p = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).cwiseProduct(scale);
        c.points.emplace_back(std::cos(yaw) * p.x() - std::sin(yaw) * p.z(), p.y(),
                              std::sin(yaw) * p.x() + std::cos(yaw) * p.z());
    }
    return c;
}

PointCloud rotate_y(const PointCloud& c, double phi) {
    PointCloud out;
    for (const auto& p : c.points)
        out.points.emplace_back(std::cos(phi) * p.x() - std::sin(phi) * p.z(), p.y(),
                                std::sin(phi) * p.x() + std::cos(phi) * p.z());
    return out;
}

// Difference of two yaws modulo 90 degrees, folded into [0, 45].
double yaw_gap(double a, double b) {
    double d = std::fmod(std::abs(a - b), kPi / 2);
    return std::min(d, kPi / 2 - d);
}

}  // namespace

TEST_SUITE("obb") {

TEST_CASE("unit cube corners") {
    PointCloud c;
    for (int i = 0; i < 8; ++i) c.points.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    const OrientedBox3D b = fit_min_obb_yaw(c);
    CHECK((b.center - Vec3(0.5, 0.5, 0.5)).norm() < 1e-12);
    CHECK((b.half_extents - Vec3(0.5, 0.5, 0.5)).norm() < 1e-12);
    CHECK(std::abs(b.yaw) < 1e-12);
}

TEST_CASE("rotated square recovers the rotation") {
    PointCloud c;
    const double phi = 30.0 * kPi / 180.0;
    for (double x : {-0.5, 0.5})
        for (double z : {-0.5, 0.5})
            for (double y : {0.0, 1.0})
                c.points.emplace_back(std::cos(phi) * x - std::sin(phi) * z, y, std::sin(phi) * x + std::cos(phi) * z);
    const OrientedBox3D b = fit_min_obb_yaw(c);
    CHECK(yaw_gap(b.yaw, phi) < 1e-9);
    CHECK(b.yaw >= -kPi / 4);
    CHECK(b.yaw < kPi / 4);
    CHECK(b.half_extents.x() == doctest::Approx(0.5));
    CHECK(b.half_extents.z() == doctest::Approx(0.5));
}

TEST_CASE("minimal against the yaw sweep and containment") {
    Rng rng(10);
    for (int i = 0; i < 30; ++i) {
        const PointCloud c = random_cloud(rng, 200);
        const OrientedBox3D fit = fit_min_obb_yaw(c);
        const OrientedBox3D sweep = fit_min_obb_yaw_sweep(c, 0.1);
        CHECK(fit.volume() <= (1 + 1e-3) * sweep.volume());
        CHECK(fit.volume() <= sweep.volume() + 1e-9);
        for (const auto& p : c.points) CHECK(fit.contains(p, 1e-9));
        CHECK(fit.yaw >= -kPi / 4);
        CHECK(fit.yaw < kPi / 4);
    }
}

TEST_CASE("small instances: no containing sweep candidate beats the fit") {
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        const PointCloud c = random_cloud(rng, 6);
        const OrientedBox3D fit = fit_min_obb_yaw(c);
        for (int k = 0; k < 900; ++k) {
            const double yaw = k * 0.1 * kPi / 180.0;
            const Vec2 u(std::cos(yaw), std::sin(yaw)), w(-std::sin(yaw), std::cos(yaw));
            double ulo = 1e300, uhi = -1e300, wlo = 1e300, whi = -1e300, ylo = 1e300, yhi = -1e300;
            for (const auto& p : c.points) {
                const Vec2 q(p.x(), p.z());
                ulo = std::min(ulo, u.dot(q));
                uhi = std::max(uhi, u.dot(q));
                wlo = std::min(wlo, w.dot(q));
                whi = std::max(whi, w.dot(q));
                ylo = std::min(ylo, p.y());
                yhi = std::max(yhi, p.y());
            }
            CHECK(fit.volume() <= (uhi - ulo) * (whi - wlo) * (yhi - ylo) + 1e-9);
        }
    }
}

TEST_CASE("yaw equivariance") {
    Rng rng(12);
    for (int i = 0; i < 20; ++i) {
        const PointCloud c = random_cloud(rng, 100);
        const double phi = rng.uniform(-kPi, kPi);
        const OrientedBox3D a = fit_min_obb_yaw(c);
        const OrientedBox3D b = fit_min_obb_yaw(rotate_y(c, phi));
        CHECK(b.volume() == doctest::Approx(a.volume()).epsilon(1e-9));
        CHECK(yaw_gap(b.yaw, a.yaw + phi) < 1e-6);
        const bool same = std::abs(a.half_extents.x() - b.half_extents.x()) < 1e-9;
        const bool swapped = std::abs(a.half_extents.x() - b.half_extents.z()) < 1e-9;
        CHECK((same || swapped));
        CHECK(b.half_extents.y() == doctest::Approx(a.half_extents.y()));
    }
}

TEST_CASE("degenerate clouds") {
    PointCloud two;
    two.points = {{0, 0, 0}, {1, 1, 1}};
    CHECK_THROWS_AS(fit_min_obb_yaw(two), DegenerateInput);
    PointCloud line;
    for (int i = 0; i < 10; ++i) line.points.emplace_back(i, i % 3, 2 * i);
    CHECK_THROWS_AS(fit_min_obb_yaw(line), DegenerateInput);
}

TEST_CASE("iou examples") {
    OrientedBox3D a;
    a.half_extents = Vec3(0.5, 0.5, 0.5);
    a.yaw = 0.2;
    CHECK(obb_iou(a, a) == 1.0);

    OrientedBox3D far = a;
    far.center = Vec3(10, 0, 0);
    CHECK(obb_iou(a, far) == 0.0);

    OrientedBox3D u, v;
    v.center = Vec3(0.5, 0, 0);
    CHECK(obb_iou(u, v) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(obb_iou_sampled(u, v) - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("iou is symmetric and deterministic") {
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        OrientedBox3D a, b;
        a.center = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        b.center = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        a.half_extents = Vec3(rng.uniform(0.2, 1), rng.uniform(0.2, 1), rng.uniform(0.2, 1));
        b.half_extents = Vec3(rng.uniform(0.2, 1), rng.uniform(0.2, 1), rng.uniform(0.2, 1));
        a.yaw = rng.uniform(-0.7, 0.7);
        b.yaw = rng.uniform(-0.7, 0.7);
        const double ab = obb_iou(a, b, 20000, 5), ba = obb_iou(b, a, 20000, 5);
        CHECK(ab == ba);
        CHECK(ab == obb_iou(a, b, 20000, 5));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("sampled iou against the closed form") {
    Rng rng(14);
    for (int i = 0; i < 10; ++i) {
        OrientedBox3D a, b;
        a.half_extents = Vec3(rng.uniform(0.3, 1), rng.uniform(0.3, 1), rng.uniform(0.3, 1));
        b.half_extents = Vec3(rng.uniform(0.3, 1), rng.uniform(0.3, 1), rng.uniform(0.3, 1));
        b.center = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        a.yaw = b.yaw = rng.uniform(-0.7, 0.7);
        CHECK(std::abs(obb_iou_sampled(a, b) - obb_iou(a, b)) <= 0.01);
    }
}

TEST_CASE("sweep3d contains every point and is no worse than an axis box") {
    Rng rng(15);
    const PointCloud c = random_cloud(rng, 80);
    const FreeBox f = fit_min_obb_sweep3d(c);
    for (const auto& p : c.points) CHECK(f.contains(p, 1e-9));
    CHECK(f.volume() <= fit_min_obb_yaw(c).volume() * (1 + 1e-3));
}

}
