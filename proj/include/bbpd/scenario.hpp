#ifndef BBPD_SCENARIO_HPP
#define BBPD_SCENARIO_HPP

#include <bbpd/config.hpp>
#include <bbpd/diagnostics.hpp>
#include <bbpd/dynamics.hpp>
#include <bbpd/fluidpd.hpp>

#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace bbpd
{

//! Everything a run needs, assembled from a RunConfig.
struct Scenario
{
    RunConfig config;
    PointCloud cloud;
    HorizonConfig horizon;
    BondNetwork bonds;
    KernelModel model;
    ExternalLoad load;
    double dt = 0.0;
    std::vector<Vec3> u0;
    std::vector<Vec3> v0;
};

inline ExternalLoad make_load( const LoadSection& load, const PointCloud& cloud )
{
    if ( load.preset == "constant" )
        return ExternalLoad::constant( load.vector );
    if ( load.preset == "sinusoidal" )
        return ExternalLoad::sinusoidal( load.vector, load.wavenumber, load.axis );
    if ( load.preset == "tension" )
    {
        const int a = load.axis;
        return ExternalLoad::tension( a, load.magnitude, cloud.origin[a],
                                      cloud.origin[a] + cloud.box[a], load.band,
                                      load.ramp );
    }
    return ExternalLoad::none();
}

/*!
  True when the segment between two reference points crosses the seeded
  edge crack of plate2d-precrack: the line y = mid-height from the left
  edge to crack_length times the width.
*/
inline bool crosses_crack( const RunConfig& cfg, const Vec3& a, const Vec3& b )
{
    const double yc = 0.5 * cfg.domain.box[1];
    const double xend = cfg.scenario.crack_length * cfg.domain.box[0];
    if ( ( a[1] - yc ) * ( b[1] - yc ) >= 0.0 )
        return false;
    const double t = ( yc - a[1] ) / ( b[1] - a[1] );
    const double x = a[0] + t * ( b[0] - a[0] );
    return x <= xend;
}

inline Scenario make_scenario( const RunConfig& cfg )
{
    Scenario s;
    s.config = cfg;
    const auto& d = cfg.domain;
    s.cloud = build_grid( d.dim, d.box, d.h, d.density, d.periodic );
    s.horizon = { cfg.horizon.delta, cfg.horizon.partial_volume, d.h };
    s.bonds = build_bonds( s.cloud, s.horizon );
    s.model = make_kernel( cfg );
    s.load = make_load( cfg.load, s.cloud );
    s.dt = cfg.time.dt ? *cfg.time.dt
                       : stable_dt( s.cloud, s.bonds, s.model, cfg.time.safety );

    const std::size_t n = s.cloud.size();
    s.u0.assign( n, Vec3{} );
    s.v0.assign( n, Vec3{} );
    const double amp = cfg.scenario.amplitude;
    if ( cfg.scenario.preset == "bar1d-wave" )
    {
        // Travelling wave A sin(k (x - c t)) at the network's long-wave speed.
        double e = 0.0;
        for ( const auto& b : s.bonds.neighbors( 0 ) )
            e += 0.5 * bond_stiffness( s.model, b.xi_norm ) * b.weight * b.xi_norm *
                 b.xi_norm;
        const double c = std::sqrt( e / d.density );
        const double k = 2.0 * std::numbers::pi / d.box[0];
        for ( std::size_t i = 0; i < n; ++i )
        {
            const double x = s.cloud.positions[i][0];
            s.u0[i][0] = amp * std::sin( k * x );
            s.v0[i][0] = -amp * k * c * std::cos( k * x );
        }
    }
    else if ( cfg.scenario.preset == "fluid-shear" && d.dim >= 2 )
    {
        const double k = 2.0 * std::numbers::pi / d.box[1];
        for ( std::size_t i = 0; i < n; ++i )
            s.v0[i][0] = amp * std::sin( k * s.cloud.positions[i][1] );
    }
    return s;
}

//! State handed to observers after each recorded step.
struct Frame
{
    std::size_t step = 0;
    double t = 0.0;
    const PointCloud* cloud = nullptr;
    std::span<const Vec3> u;
    std::span<const Vec3> v;
    std::vector<double> damage;
    EnergyReport energy;
    Vec3 momentum;
    bool last = false;
};

using FrameObserver = std::function<void( const Frame& )>;

/*!
  \brief Bond-based run of a configuration: builds the scenario, seeds the
  crack for plate2d-precrack, and calls `observe` on step 0, every
  record_every-th step and the last step.
*/
inline Simulation run_solid( const RunConfig& cfg, const FrameObserver& observe )
{
    Scenario s = make_scenario( cfg );
    Simulation sim( s.cloud, s.bonds, s.model, s.load, s.dt );
    sim.set_initial( s.u0, s.v0 );
    if ( cfg.scenario.preset == "plate2d-precrack" )
    {
        const auto& x = sim.cloud().positions;
        sim.break_bonds( [&]( std::size_t i, const Bond& b ) {
            return crosses_crack( cfg, x[i], x[b.j] );
        } );
    }

    std::optional<double> e0;
    const std::size_t steps = cfg.time.steps;
    run( sim, steps, cfg.time.record_every, [&]( const Simulation& m ) {
        if ( !observe )
            return;
        Frame f;
        f.step = m.state().step;
        f.t = m.state().t;
        f.cloud = &m.cloud();
        f.u = m.state().u;
        f.v = m.state().v;
        f.damage = damage_field( m.bonds(), m.breaker().mu );
        f.energy = energy( m.cloud(), m.bonds(), m.model(), m.state(), m.breaker().mu, e0 );
        if ( !e0 )
            e0 = f.energy.total;
        f.momentum = total_momentum( m.cloud(), m.state().v );
        f.last = f.step == steps;
        observe( f );
    } );
    return sim;
}

/*!
  \brief Fading-memory run of a configuration with the same recording
  cadence as run_solid. Potential energy is reported in infinite-memory
  mode only; otherwise the column is zero.
*/
inline FluidSimulation run_fluid( const RunConfig& cfg, const FrameObserver& observe )
{
    Scenario s = make_scenario( cfg );
    FluidSimulation sim( s.cloud, s.horizon, s.model, cfg.memory.to_memory(), s.load,
                         s.dt );
    sim.set_initial( s.u0, s.v0 );

    std::optional<double> e0;
    const std::size_t steps = cfg.time.steps;
    const std::size_t every = std::max<std::size_t>( cfg.time.record_every, 1 );
    auto record = [&]() {
        if ( !observe )
            return;
        Frame f;
        f.step = sim.state().step;
        f.t = sim.state().t;
        f.cloud = &sim.cloud();
        f.u = sim.state().u;
        f.v = sim.state().v;
        f.damage.assign( sim.cloud().size(), 0.0 );
        if ( const Simulation* solid = sim.solid() )
        {
            f.damage = damage_field( solid->bonds(), solid->breaker().mu );
            f.energy = energy( solid->cloud(), solid->bonds(), solid->model(),
                               solid->state(), solid->breaker().mu, e0 );
        }
        else
        {
            f.energy.t = f.t;
            f.energy.kinetic = sim.kinetic_energy();
            f.energy.total = f.energy.kinetic;
            f.energy.initial_total = e0.value_or( f.energy.total );
        }
        if ( !e0 )
            e0 = f.energy.total;
        f.momentum = sim.momentum();
        f.last = f.step == steps;
        observe( f );
    };
    record();
    for ( std::size_t k = 1; k <= steps; ++k )
    {
        sim.step();
        if ( k % every == 0 || k == steps )
            record();
    }
    return sim;
}

} // namespace bbpd

#endif // BBPD_SCENARIO_HPP
