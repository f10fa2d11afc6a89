#include <gtest/gtest.h>

#include <wgqed/dynamics.hpp>
#include <wgqed/model.hpp>
#include <wgqed/superop.hpp>

#include <numbers>
#include <random>

using namespace wgqed;

namespace {

constexpr double pi = std::numbers::pi;

EmitterParams emitter(double gamma, double beta, double dephasing = 0.0, double detuning = 0.0) {
    EmitterParams e;
    e.gamma_total = gamma;
    e.beta = beta;
    e.dephasing = dephasing;
    e.detuning = detuning;
    return e;
}

double expect(const Operator& op, const StateVector& psi) { return (psi.adjoint() * op * psi)(0, 0).real(); }

Operator random_density(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Operator a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = Complex(n(rng), n(rng));
    Operator rho = a * a.adjoint();
    return rho / rho.trace();
}

} // namespace

TEST(CouplingRates, Examples) {
    const double g = 1.7;
    auto r = coupling_rates(g, g, 0.0);
    EXPECT_DOUBLE_EQ(r.dissipative, g);
    EXPECT_DOUBLE_EQ(r.dispersive, 0.0);
    r = coupling_rates(g, g, pi / 2);
    EXPECT_NEAR(r.dissipative, 0.0, 1e-15);
    EXPECT_NEAR(r.dispersive, g / 2, 1e-15);
    r = coupling_rates(g, g, 0.8 * pi);
    EXPECT_NEAR(r.dissipative, -0.809017 * g, 1e-6);
    EXPECT_NEAR(r.dispersive, 0.293893 * g, 1e-6);
}

TEST(FieldOperator, SingleEmitterSplitsEvenly) {
    const auto sys = WaveguideSystem::single(emitter(2.0, 0.9));
    const StateVector e = product_state({true});
    for (auto d : {Direction::left, Direction::right}) {
        const Operator f = field_operator(sys, d);
        EXPECT_NEAR(expect(f.adjoint() * f, e), 0.9, 1e-14);
    }
}

TEST(FieldOperator, SubradiantStateIsDarkAtZeroPhase) {
    const auto sys = WaveguideSystem::pair(emitter(1.0, 1.0), emitter(1.0, 1.0), 0.0);
    const Operator f = field_operator(sys, Direction::left);
    EXPECT_NEAR(expect(f.adjoint() * f, collective_state({CollectiveKind::minus, 0.0})), 0.0, 1e-15);
}

TEST(FieldOperator, PiPhiStatesEmitOneWay) {
    const double phi = 0.8 * pi, g = 1.3;
    const auto sys = WaveguideSystem::pair(emitter(g, 1.0), emitter(g, 1.0), phi);
    const Operator el = field_operator(sys, Direction::left), er = field_operator(sys, Direction::right);
    const auto qm = collective_state({CollectiveKind::pi_minus_phi, phi});
    const auto qp = collective_state({CollectiveKind::pi_plus_phi, phi});
    EXPECT_NEAR(expect(el.adjoint() * el, qm), 0.0, 1e-14);
    EXPECT_NEAR(expect(er.adjoint() * er, qm), g * (1.0 - std::cos(2 * phi)) / 2, 1e-14);
    EXPECT_NEAR(expect(er.adjoint() * er, qp), 0.0, 1e-14);
    EXPECT_NEAR(expect(el.adjoint() * el, qp), g * (1.0 - std::cos(2 * phi)) / 2, 1e-14);
}

TEST(FieldOperator, TotalFluxIdentity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 2.0), ph(-4.0, 4.0), b(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 2;
        std::vector<EmitterParams> em;
        std::vector<double> th;
        for (int m = 0; m < n; ++m) {
            em.push_back(emitter(u(rng), b(rng)));
            th.push_back(ph(rng));
        }
        const WaveguideSystem sys(em, th);
        const Operator el = field_operator(sys, Direction::left), er = field_operator(sys, Direction::right);
        Operator expected = Operator::Zero(el.rows(), el.cols());
        for (int m = 0; m < n; ++m)
            for (int k = 0; k < n; ++k) {
                const double rate = std::sqrt(em[m].gamma_wg() * em[k].gamma_wg()) * std::cos(sys.coupling_phase(m, k));
                expected += rate * raising_operator(n, m) * lowering_operator(n, k);
            }
        EXPECT_LT((el.adjoint() * el + er.adjoint() * er - expected).norm(), 1e-12);
    }
}

TEST(EffectiveHamiltonian, SymmetricDissipativeCase) {
    const double g = 1.4;
    const auto sys = WaveguideSystem::pair(emitter(g, 1.0), emitter(g, 1.0), 0.0);
    Eigen::ComplexEigenSolver<Operator> es(effective_hamiltonian(sys));
    std::vector<double> im{es.eigenvalues()(0).imag(), es.eigenvalues()(1).imag()};
    std::sort(im.begin(), im.end());
    EXPECT_NEAR(im[0], -g, 1e-12);
    EXPECT_NEAR(im[1], 0.0, 1e-12);
}

TEST(EffectiveHamiltonian, PurelyDispersiveCase) {
    const double g = 1.4;
    const auto sys = WaveguideSystem::pair(emitter(g, 1.0), emitter(g, 1.0), pi / 2);
    Eigen::ComplexEigenSolver<Operator> es(effective_hamiltonian(sys));
    const double split = std::abs(es.eigenvalues()(0).real() - es.eigenvalues()(1).real());
    EXPECT_NEAR(split, g, 1e-12);
    EXPECT_NEAR(split, 2 * coupling_rates(g, g, pi / 2).dispersive, 1e-12);
}

TEST(EffectiveHamiltonian, ReferencePresetMatchesClosedFormEigenvalues) {
    const auto sys = presets::table_one();
    const Operator h = effective_hamiltonian(sys);
    // entries written out independently
    const double g1 = units::from_ghz(0.388), g2 = units::from_ghz(0.349), b1 = 0.95, b2 = 0.85;
    const Complex off = -0.5 * I * std::exp(I * 0.8 * pi) * std::sqrt(b1 * b2 * g1 * g2);
    EXPECT_NEAR(std::abs(h(0, 0) - Complex(0, -g1 / 2)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(h(1, 1) - Complex(0, -g2 / 2)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(h(0, 1) - off), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(h(1, 0) - off), 0.0, 1e-14);
    const Complex mean = 0.5 * (h(0, 0) + h(1, 1));
    const Complex root = std::sqrt(0.25 * (h(0, 0) - h(1, 1)) * (h(0, 0) - h(1, 1)) + off * off);
    Eigen::ComplexEigenSolver<Operator> es(h);
    for (const Complex expected : {mean + root, mean - root}) {
        double best = 1e9;
        for (int i = 0; i < 2; ++i) best = std::min(best, std::abs(es.eigenvalues()(i) - expected));
        EXPECT_LT(best, 1e-12);
    }
}

TEST(Superoperator, VecIdentity) {
    std::mt19937_64 rng(1);
    const Operator a = random_density(4, rng) + I * random_density(4, rng);
    const Operator b = random_density(4, rng);
    const Operator x = random_density(4, rng);
    EXPECT_LT((unvec(spre(a) * spost(b) * vec(x)) - a * x * b).norm(), 1e-13);
    const Operator c = lowering_operator(2, 0) + 0.5 * lowering_operator(2, 1);
    EXPECT_LT((unvec(dissipator(c) * vec(x)) - apply_dissipator(c, x)).norm(), 1e-13);
}

TEST(Lindblad, TraceAnnihilatingAndCompletelyPositive) {
    const auto sys = presets::table_one();
    const auto drive = DriveConfig::cw({1.0, 0.5}, {0.0, 0.7});
    const SuperOperator l = lindblad_generator(sys, drive, 0.0);
    const StateVector tr = vec(identity(2));
    EXPECT_LT((tr.adjoint() * l).norm(), 1e-12);
    // Choi matrix of exp(L t) is positive semidefinite.
    const SuperOperator map = (l * 0.3).exp();
    const int d = 4;
    Operator choi = Operator::Zero(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Operator eij = Operator::Zero(d, d);
            eij(i, j) = 1.0;
            const Operator out = unvec(map * vec(eij));
            choi.block(i * d, j * d, d, d) = out;
        }
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (choi + choi.adjoint()));
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Lindblad, GuidedDissipatorEqualsPairwiseForm) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.2, 3.0), b(0.0, 1.0), ph(0.0, 2 * pi);
    for (int trial = 0; trial < 20; ++trial) {
        const auto sys = WaveguideSystem::pair(emitter(u(rng), b(rng)), emitter(u(rng), b(rng)), ph(rng));
        const Operator rho = random_density(4, rng);
        Operator lhs = Operator::Zero(4, 4);
        for (auto d : {Direction::left, Direction::right}) lhs += apply_dissipator(field_operator(sys, d), rho);
        for (int m = 0; m < 2; ++m)
            lhs += apply_dissipator(std::sqrt(sys.emitter(m).gamma_loss()) * lowering_operator(2, m), rho);
        Operator rhs = Operator::Zero(4, 4);
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n) {
                const double rate = m == n ? sys.emitter(m).gamma_total
                                           : std::sqrt(sys.emitter(m).gamma_wg() * sys.emitter(n).gamma_wg()) *
                                                 std::cos(sys.coupling_phase(m, n));
                const Operator sm = lowering_operator(2, m), sn = lowering_operator(2, n);
                rhs += rate * (sn * rho * sm.adjoint() - 0.5 * (sm.adjoint() * sn * rho + rho * sm.adjoint() * sn));
            }
        EXPECT_LT((lhs - rhs).norm(), 1e-12);
    }
}

TEST(Lindblad, PhasePeriodicity) {
    const auto a = presets::table_one(0.8 * pi);
    const auto b = presets::table_one(0.8 * pi + 2 * pi);
    const auto drive = DriveConfig::cw({1.0, 0.3}, {0.0, 1.0});
    EXPECT_LT((lindblad_generator(a, drive, 0.0) - lindblad_generator(b, drive, 0.0)).norm(), 1e-12);
}

TEST(Lindblad, PhaseNegationSwapsPorts) {
    const auto a = presets::table_one(0.8 * pi);
    const auto b = presets::table_one(-0.8 * pi);
    const auto drive = DriveConfig::cw({1.0, 0.6}, {0.0, 0.4});
    const auto ra = steady_state(a, drive), rb = steady_state(b, drive);
    auto flux = [](const WaveguideSystem& s, const DensityState& r, Direction d) {
        const Operator e = field_operator(s, d);
        return (e.adjoint() * e * r.matrix()).trace().real();
    };
    EXPECT_NEAR(flux(a, ra, Direction::left), flux(b, rb, Direction::right), 1e-10);
    EXPECT_NEAR(flux(a, ra, Direction::right), flux(b, rb, Direction::left), 1e-10);
    EXPECT_LT((lindblad_generator(a, drive, 0.0) - lindblad_generator(b, drive, 0.0)).norm(), 1e-12);
}

TEST(Lindblad, MirrorSwapExchangesPorts) {
    const auto t1 = presets::table_one();
    const double phi = 0.8 * pi, theta_d = 0.37;
    const auto a = WaveguideSystem::pair(t1.emitter(0), t1.emitter(1), phi);
    const auto b = WaveguideSystem::pair(t1.emitter(1), t1.emitter(0), phi);
    const auto da = DriveConfig::cw({1.1, 0.7}, {0.0, theta_d});
    const auto db = DriveConfig::cw({0.7, 1.1}, {0.0, -theta_d});
    const auto ra = steady_state(a, da), rb = steady_state(b, db);
    auto flux = [](const WaveguideSystem& s, const DensityState& r, Direction d) {
        const Operator e = field_operator(s, d);
        return (e.adjoint() * e * r.matrix()).trace().real();
    };
    EXPECT_NEAR(flux(a, ra, Direction::left), flux(b, rb, Direction::right), 1e-10);
    EXPECT_NEAR(flux(a, ra, Direction::right), flux(b, rb, Direction::left), 1e-10);
}

TEST(Drive, PulseEnvelopeAndArea) {
    PulseShape p;
    EXPECT_DOUBLE_EQ(p.envelope(p.center()), 1.0);
    EXPECT_EQ(p.envelope(p.end() + 1e-9), 0.0);
    EXPECT_EQ(p.envelope(p.repetition_period * 0.5), 0.0);
    EXPECT_DOUBLE_EQ(p.envelope(p.center() + 3 * p.repetition_period), 1.0);
    // numerical area of the unit-peak envelope
    double s = 0.0;
    const double h = p.sigma_t / 2000;
    for (double t = 0.5 * h; t < p.end(); t += h) s += p.envelope(t) * h;
    EXPECT_NEAR(s, p.unit_area(), 1e-9);
    const auto d = DriveConfig::pulsed({pi}, {0.0}, p);
    EXPECT_NEAR(d.area(0), pi, 1e-14);
}

TEST(Validation, RejectsBadParameters) {
    EXPECT_THROW(WaveguideSystem::single(emitter(1.0, 1.2)), InvalidArgument);
    EXPECT_THROW(WaveguideSystem::single(emitter(-1.0, 0.5)), InvalidArgument);
    EXPECT_THROW(WaveguideSystem::single(emitter(1.0, 0.5, -0.1)), InvalidArgument);
    EXPECT_THROW(WaveguideSystem({emitter(1, 1)}, {0.0, 1.0}), InvalidArgument);
    const auto sys = WaveguideSystem::single(emitter(1.0, 1.0));
    PulseShape short_period;
    short_period.repetition_period = 5.0;  // < 10 lifetimes
    EXPECT_THROW(DriveConfig::pulsed({pi}, {0.0}, short_period).validate(sys), InvalidArgument);
    EXPECT_THROW(DriveConfig::cw({-1.0}, {0.0}).validate(sys), InvalidArgument);
    EXPECT_THROW(DriveConfig::cw({1.0, 1.0}, {0.0, 0.0}).validate(sys), InvalidArgument);
    EXPECT_THROW(check_superoperator_size(6), SizeError);
}
