#ifndef BBPD_DYNAMICS_HPP
#define BBPD_DYNAMICS_HPP

#include <bbpd/discretization.hpp>
#include <bbpd/kernels.hpp>
#include <bbpd/vec.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bbpd
{

//! Unknowns of the Cauchy problem on the point cloud.
struct SimState
{
    std::vector<Vec3> u;
    std::vector<Vec3> v;
    double t = 0.0;
    std::size_t step = 0;

    SimState() = default;
    explicit SimState( std::size_t n )
        : u( n )
        , v( n )
    {
    }
};

//---------------------------------------------------------------------------//
//! External force density b(x, t).
//---------------------------------------------------------------------------//
class ExternalLoad
{
  public:
    using Function = std::function<Vec3( const Vec3&, double )>;

    ExternalLoad() = default;

    static ExternalLoad none() { return {}; }

    static ExternalLoad constant( const Vec3& b )
    {
        return ExternalLoad( [b]( const Vec3&, double ) { return b; } );
    }

    //! amplitude * sin(k x_axis).
    static ExternalLoad sinusoidal( const Vec3& amplitude, double wavenumber,
                                    int axis = 0 )
    {
        return ExternalLoad( [=]( const Vec3& x, double ) {
            return std::sin( wavenumber * x[axis] ) * amplitude;
        } );
    }

    /*!
      Opposing body forces on two boundary bands along `axis`: +magnitude on
      points with x_axis >= hi - band, -magnitude on x_axis <= lo + band.
      Ramped linearly over `ramp` time units when ramp > 0.
    */
    static ExternalLoad tension( int axis, double magnitude, double lo,
                                 double hi, double band, double ramp = 0.0 )
    {
        return ExternalLoad( [=]( const Vec3& x, double t ) {
            const double scale = ramp > 0.0 ? std::min( 1.0, t / ramp ) : 1.0;
            Vec3 b;
            if ( x[axis] >= hi - band )
                b[axis] = magnitude * scale;
            else if ( x[axis] <= lo + band )
                b[axis] = -magnitude * scale;
            return b;
        } );
    }

    static ExternalLoad custom( Function fn ) { return ExternalLoad( std::move( fn ) ); }

    bool is_zero() const { return !fn_; }

    Vec3 operator()( const Vec3& x, double t ) const
    {
        return fn_ ? fn_( x, t ) : Vec3{};
    }

  private:
    explicit ExternalLoad( Function fn )
        : fn_( std::move( fn ) )
    {
    }
    Function fn_;
};

/*!
  \brief Nonlocal internal force density at every point,
  F(i) = sum_j f(xi_ij, u_j - u_i) mu_ij w_ij.

  Accumulates in ascending point and neighbour order. An empty `mu` means
  every bond is intact.
*/
inline void internal_force( const BondNetwork& bonds, const KernelModel& model,
                            std::span<const Vec3> u, std::span<const double> mu,
                            std::span<Vec3> out )
{
    const std::size_t n = bonds.num_points();
    for ( std::size_t i = 0; i < n; ++i )
    {
        Vec3 acc;
        for ( std::size_t b = bonds.begin( i ); b < bonds.end( i ); ++b )
        {
            const Bond& bond = bonds.bonds[b];
            const double m = mu.empty() ? 1.0 : mu[b];
            if ( m == 0.0 )
                continue;
            try
            {
                acc += bond.weight *
                       pairwise_force( model, bond.xi, u[bond.j] - u[i], m );
            }
            catch ( const SingularConfiguration& e )
            {
                throw SingularConfiguration( std::string( e.what() ) +
                                             " on bond (" + std::to_string( i ) +
                                             ", " + std::to_string( bond.j ) +
                                             ")" );
            }
        }
        out[i] = acc;
    }
}

inline std::vector<Vec3> internal_force( const BondNetwork& bonds,
                                         const KernelModel& model,
                                         std::span<const Vec3> u,
                                         std::span<const double> mu = {} )
{
    std::vector<Vec3> out( bonds.num_points() );
    internal_force( bonds, model, u, mu, out );
    return out;
}

/*!
  \brief Explicit stable time step
  safety * sqrt(2 rho / max_i sum_j w_ij C_ij), where C_ij is the bond
  stiffness at eta = 0.
*/
inline double stable_dt( const PointCloud& cloud, const BondNetwork& bonds,
                         const KernelModel& model, double safety = 0.5 )
{
    double worst = 0.0;
    for ( std::size_t i = 0; i < bonds.num_points(); ++i )
    {
        double sum = 0.0;
        for ( const auto& b : bonds.neighbors( i ) )
            sum += b.weight * bond_stiffness( model, b.xi_norm );
        worst = std::max( worst, sum );
    }
    if ( !( worst > 0.0 ) )
        throw InputError( "stable_dt: bond network has zero stiffness" );
    return safety * std::sqrt( 2.0 * cloud.density / worst );
}

//! Total linear momentum sum_i rho V_i v_i.
inline Vec3 total_momentum( const PointCloud& cloud, std::span<const Vec3> v )
{
    Vec3 p;
    for ( std::size_t i = 0; i < v.size(); ++i )
        p += cloud.mass( i ) * v[i];
    return p;
}

//! Apply one end-of-step breaker update to every bond.
inline bool update_breakers( const BondNetwork& bonds, const KernelModel& model,
                             std::span<const Vec3> u, double dt,
                             BreakerState& state )
{
    const BondBreaker breaker = breaker_of( model );
    if ( breaker.mode == BreakerMode::none )
        return false;
    bool changed = false;
    for ( std::size_t i = 0; i < bonds.num_points(); ++i )
        for ( std::size_t b = bonds.begin( i ); b < bonds.end( i ); ++b )
        {
            const Bond& bond = bonds.bonds[b];
            const double before = state.mu[b];
            const double s =
                ( norm( bond.xi + ( u[bond.j] - u[i] ) ) - bond.xi_norm ) /
                bond.xi_norm;
            update_breaker( breaker, bond_critical_stretch( model, bond.xi_norm ),
                            s, dt, state.mu[b], state.accumulator[b] );
            changed = changed || state.mu[b] != before;
        }
    return changed;
}

/*!
  \brief Velocity-Verlet integrator for rho u_tt = K u + b.

  Keeps the force at the current state cached between steps so each step
  costs one force evaluation (two when a bond breaks).
*/
class Simulation
{
  public:
    Simulation( PointCloud cloud, BondNetwork bonds, KernelModel model,
                ExternalLoad load, double dt )
        : cloud_( std::move( cloud ) )
        , bonds_( std::move( bonds ) )
        , model_( std::move( model ) )
        , load_( std::move( load ) )
        , dt_( dt )
        , state_( cloud_.size() )
        , breaker_( bonds_.num_bonds() )
        , force_( cloud_.size() )
    {
        if ( !( dt > 0.0 ) )
            throw InputError( "time step must be positive" );
        refresh_force();
    }

    //! Replace the initial displacement/velocity fields.
    void set_initial( std::vector<Vec3> u0, std::vector<Vec3> v0 )
    {
        if ( u0.size() != cloud_.size() || v0.size() != cloud_.size() )
            throw InputError( "initial fields must have one entry per point" );
        state_.u = std::move( u0 );
        state_.v = std::move( v0 );
        refresh_force();
    }

    //! Mark bonds as broken before the run starts (pre-cracks).
    void break_bonds( const std::function<bool( std::size_t, const Bond& )>& pred )
    {
        for ( std::size_t i = 0; i < bonds_.num_points(); ++i )
            for ( std::size_t b = bonds_.begin( i ); b < bonds_.end( i ); ++b )
                if ( pred( i, bonds_.bonds[b] ) )
                {
                    breaker_.mu[b] = 0.0;
                    breaker_.mu[bonds_.reverse[b]] = 0.0;
                }
        refresh_force();
    }

    void step()
    {
        const std::size_t n = cloud_.size();
        const double rho = cloud_.density;
        const double t0 = state_.t;
        const double t1 = t0 + dt_;

        for ( std::size_t i = 0; i < n; ++i )
        {
            const Vec3 a = ( force_[i] + load_( cloud_.positions[i], t0 ) ) / rho;
            state_.v[i] += ( 0.5 * dt_ ) * a;
            state_.u[i] += dt_ * state_.v[i];
        }
        internal_force( bonds_, model_, state_.u, breaker_.mu, force_ );
        for ( std::size_t i = 0; i < n; ++i )
        {
            const Vec3 a = ( force_[i] + load_( cloud_.positions[i], t1 ) ) / rho;
            state_.v[i] += ( 0.5 * dt_ ) * a;
        }
        state_.t = t1;
        ++state_.step;

        for ( std::size_t i = 0; i < n; ++i )
            if ( !is_finite( state_.u[i] ) || !is_finite( state_.v[i] ) )
                throw SimulationError( "non-finite state at step " +
                                       std::to_string( state_.step ) +
                                       ", point " + std::to_string( i ) );

        if ( update_breakers( bonds_, model_, state_.u, dt_, breaker_ ) )
            refresh_force();
    }

    const PointCloud& cloud() const { return cloud_; }
    const BondNetwork& bonds() const { return bonds_; }
    const KernelModel& model() const { return model_; }
    const ExternalLoad& load() const { return load_; }
    const SimState& state() const { return state_; }
    const BreakerState& breaker() const { return breaker_; }
    //! Internal force at the current state.
    const std::vector<Vec3>& force() const { return force_; }
    double dt() const { return dt_; }

  private:
    void refresh_force()
    {
        internal_force( bonds_, model_, state_.u, breaker_.mu, force_ );
    }

    PointCloud cloud_;
    BondNetwork bonds_;
    KernelModel model_;
    ExternalLoad load_;
    double dt_;
    SimState state_;
    BreakerState breaker_;
    std::vector<Vec3> force_;
};

/*!
  \brief One velocity-Verlet step from `state`, recomputing the start-of-step
  force. Breaker state, when given, is updated from the end-of-step
  stretches.
*/
inline SimState step_verlet( const SimState& state, const PointCloud& cloud,
                             const BondNetwork& bonds, const KernelModel& model,
                             const ExternalLoad& load, double dt,
                             BreakerState* breaker = nullptr )
{
    if ( !( dt > 0.0 ) )
        throw InputError( "step_verlet: dt must be positive" );
    std::span<const double> mu;
    if ( breaker )
        mu = breaker->mu;
    SimState next = state;
    const double rho = cloud.density;
    auto force = internal_force( bonds, model, state.u, mu );
    for ( std::size_t i = 0; i < cloud.size(); ++i )
    {
        next.v[i] += ( 0.5 * dt / rho ) * ( force[i] + load( cloud.positions[i], state.t ) );
        next.u[i] += dt * next.v[i];
    }
    internal_force( bonds, model, next.u, mu, force );
    for ( std::size_t i = 0; i < cloud.size(); ++i )
        next.v[i] += ( 0.5 * dt / rho ) *
                     ( force[i] + load( cloud.positions[i], state.t + dt ) );
    next.t = state.t + dt;
    ++next.step;
    for ( std::size_t i = 0; i < cloud.size(); ++i )
        if ( !is_finite( next.u[i] ) || !is_finite( next.v[i] ) )
            throw SimulationError( "non-finite state at step " +
                                   std::to_string( next.step ) );
    if ( breaker )
        update_breakers( bonds, model, next.u, dt, *breaker );
    return next;
}

/*!
  Advance `sim` by `steps`, calling `record` on the initial state and then
  after every `record_every`-th step (and after the last one).
*/
inline void run( Simulation& sim, std::size_t steps, std::size_t record_every,
                 const std::function<void( const Simulation& )>& record )
{
    record_every = std::max<std::size_t>( record_every, 1 );
    if ( record )
        record( sim );
    for ( std::size_t k = 1; k <= steps; ++k )
    {
        sim.step();
        if ( record && ( k % record_every == 0 || k == steps ) )
            record( sim );
    }
}

} // namespace bbpd

#endif // BBPD_DYNAMICS_HPP
