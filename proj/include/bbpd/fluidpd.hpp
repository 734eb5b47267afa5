#ifndef BBPD_FLUIDPD_HPP
#define BBPD_FLUIDPD_HPP

#include <bbpd/discretization.hpp>
#include <bbpd/dynamics.hpp>
#include <bbpd/kernels.hpp>
#include <bbpd/vec.hpp>

#include <cmath>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bbpd
{

//---------------------------------------------------------------------------//
// Fading-memory bond-based model. The material remembers configurations back
// to t - s: s = infinity is the elastic solid, s = 0 a fluid whose bond
// forces depend on velocity differences over a geometric horizon.
//---------------------------------------------------------------------------//
enum class MemoryMode
{
    infinite,
    finite,
    zero
};

enum class FluidKernel
{
    //! f = coefficient ((v_z - v_x) . n) n, a nonlocal viscosity.
    linear,
    //! The solid kernel evaluated at eta = coefficient (v_z - v_x).
    solid
};

struct MemoryConfig
{
    MemoryMode mode = MemoryMode::infinite;
    //! Memory time; used when mode == finite.
    double s = infinity;
    //! Scales the velocity difference (absorbs the infinitesimal delta s).
    double coefficient = 1.0;
    FluidKernel kernel = FluidKernel::linear;

    //! Memory time in steps of dt (at least one).
    std::size_t stride( double dt ) const
    {
        if ( mode != MemoryMode::finite )
            return 0;
        const double k = std::round( s / dt );
        return k < 1.0 ? 1 : static_cast<std::size_t>( k );
    }
};

inline void validate( const MemoryConfig& m )
{
    if ( m.mode == MemoryMode::finite && !( m.s > 0.0 && std::isfinite( m.s ) ) )
        throw InputError( "memory: finite mode needs 0 < s < inf" );
    if ( !std::isfinite( m.coefficient ) )
        throw InputError( "memory: coefficient must be finite" );
}

/*!
  Particle state for the memory model. Positions are carried as
  displacements from the reference lattice, chi = X + u, and particle
  masses rho V never change. `history` holds u at the most recent steps,
  oldest first, the last entry being the current step.
*/
struct FluidState
{
    std::vector<Vec3> u;
    std::vector<Vec3> v;
    double t = 0.0;
    std::size_t step = 0;
    std::deque<std::vector<Vec3>> history;
};

struct GeometricNeighborhood
{
    std::vector<Bond> neighbors;
    //! No particle other than the query lies within the horizon.
    bool empty = true;
};

/*!
  \brief All particles whose position lies within delta of particle `query`
  (minimum image on periodic axes), ascending by index.
*/
inline GeometricNeighborhood geometric_neighbors( const PointCloud& cloud,
                                                  std::span<const Vec3> positions,
                                                  std::size_t query,
                                                  const HorizonConfig& horizon )
{
    GeometricNeighborhood out;
    const double cutoff = horizon.delta * ( 1.0 + horizon_tolerance );
    for ( std::size_t j = 0; j < positions.size(); ++j )
    {
        if ( j == query )
            continue;
        const Vec3 d = minimum_image( positions[j] - positions[query], cloud.box,
                                      cloud.periodic, cloud.dim );
        const double r = norm( d );
        if ( r <= cutoff )
        {
            double w = cloud.volumes[j];
            if ( horizon.partial_volume == PartialVolume::linear )
                w *= partial_volume_factor( r, horizon.grid_spacing, horizon.delta );
            out.neighbors.push_back( { j, d, r, w } );
        }
    }
    out.empty = out.neighbors.empty();
    return out;
}

//! Positions X + u.
inline std::vector<Vec3> current_positions( const PointCloud& cloud,
                                            std::span<const Vec3> u )
{
    std::vector<Vec3> x( cloud.size() );
    for ( std::size_t i = 0; i < cloud.size(); ++i )
        x[i] = cloud.positions[i] + u[i];
    return x;
}

/*!
  Displacement field at the remembered time t - s. Before the material has
  existed for s (t < s) the extended displacement is zero, so the reference
  configuration is recovered; that is also the infinite-memory case.
  Returns nullopt in those cases.
*/
inline std::optional<std::span<const Vec3>>
remembered_displacement( const FluidState& state, const MemoryConfig& mem,
                         std::size_t stride )
{
    if ( mem.mode == MemoryMode::infinite || state.step < stride )
        return std::nullopt;
    if ( state.history.size() < stride + 1 )
        throw SimulationError( "memory force: history holds " +
                               std::to_string( state.history.size() ) +
                               " snapshots, " + std::to_string( stride + 1 ) +
                               " required" );
    return std::span<const Vec3>( state.history.front() );
}

namespace detail
{

inline Vec3 memory_bond_force( const KernelModel& model, const Bond& b,
                               std::span<const Vec3> u,
                               std::span<const Vec3> u_ref, std::size_t i )
{
    Vec3 eta;
    if ( u_ref.empty() )
        eta = ( u[b.j] - Vec3{} ) - ( u[i] - Vec3{} );
    else
        eta = ( u[b.j] - u_ref[b.j] ) - ( u[i] - u_ref[i] );
    return pairwise_force( model, b.xi, eta );
}

} // namespace detail

/*!
  \brief Finite-memory internal force at every particle.

  The horizon of x is the ball of radius delta around chi(x, t - s); each
  bond uses xi = z - chi(x, t - s) and eta = displacement of z minus
  displacement of x since t - s. `reference_bonds`, when given, must be the
  network of the reference configuration and is reused whenever the
  remembered configuration is the reference one.
*/
inline std::vector<Vec3> memory_forces( const PointCloud& cloud,
                                        const HorizonConfig& horizon,
                                        const KernelModel& model,
                                        const FluidState& state,
                                        const MemoryConfig& mem,
                                        std::size_t stride,
                                        const BondNetwork* reference_bonds = nullptr )
{
    const auto u_ref = remembered_displacement( state, mem, stride );
    BondNetwork local;
    const BondNetwork* net = reference_bonds;
    std::span<const Vec3> ref;
    if ( u_ref )
    {
        ref = *u_ref;
        const auto x_ref = current_positions( cloud, ref );
        local = build_neighbor_network( x_ref, cloud.volumes, cloud.dim, cloud.origin,
                                        cloud.box, cloud.periodic, horizon );
        net = &local;
    }
    else if ( !net )
    {
        local = build_bonds( cloud, horizon );
        net = &local;
    }

    std::vector<Vec3> out( cloud.size() );
    for ( std::size_t i = 0; i < cloud.size(); ++i )
    {
        Vec3 acc;
        for ( const auto& b : net->neighbors( i ) )
            acc += b.weight * detail::memory_bond_force( model, b, state.u, ref, i );
        out[i] = acc;
    }
    return out;
}

//! Finite-memory internal force at a single particle.
inline Vec3 memory_force( const PointCloud& cloud, const HorizonConfig& horizon,
                          const KernelModel& model, const FluidState& state,
                          const MemoryConfig& mem, std::size_t stride,
                          std::size_t point )
{
    const auto u_ref = remembered_displacement( state, mem, stride );
    std::span<const Vec3> ref;
    std::vector<Vec3> x_ref;
    if ( u_ref )
    {
        ref = *u_ref;
        x_ref = current_positions( cloud, ref );
    }
    else
        x_ref = cloud.positions;
    const auto hood = geometric_neighbors( cloud, x_ref, point, horizon );
    Vec3 acc;
    for ( const auto& b : hood.neighbors )
        acc += b.weight * detail::memory_bond_force( model, b, state.u, ref, point );
    return acc;
}

namespace detail
{

inline Vec3 fluid_bond_force( const KernelModel& model, const MemoryConfig& mem,
                              const Bond& b, const Vec3& dv )
{
    const Vec3 eta = mem.coefficient * dv;
    if ( mem.kernel == FluidKernel::solid )
        return pairwise_force( model, b.xi, eta );
    if ( !( b.xi_norm > 0.0 ) )
        throw SingularConfiguration( "fluid force: coincident particles" );
    const Vec3 n = b.xi / b.xi_norm;
    return dot( eta, n ) * n;
}

} // namespace detail

/*!
  \brief Zero-memory (fluid) force at every particle: the sum over the
  current geometric horizon of f(z - chi(x,t), coefficient (v(z) - v(x))).
  Discovered pairs are symmetric, so pairwise antisymmetric kernels conserve
  momentum exactly up to rounding.
*/
inline std::vector<Vec3> fluid_forces( const PointCloud& cloud,
                                       const HorizonConfig& horizon,
                                       const KernelModel& model,
                                       const FluidState& state,
                                       const MemoryConfig& mem )
{
    const auto x = current_positions( cloud, state.u );
    const auto net = build_neighbor_network( x, cloud.volumes, cloud.dim, cloud.origin,
                                             cloud.box, cloud.periodic, horizon );
    std::vector<Vec3> out( cloud.size() );
    for ( std::size_t i = 0; i < cloud.size(); ++i )
    {
        Vec3 acc;
        for ( const auto& b : net.neighbors( i ) )
            acc += b.weight *
                   detail::fluid_bond_force( model, mem, b, state.v[b.j] - state.v[i] );
        out[i] = acc;
    }
    return out;
}

//! Zero-memory force at a single particle.
inline Vec3 fluid_force( const PointCloud& cloud, const HorizonConfig& horizon,
                         const KernelModel& model, const FluidState& state,
                         const MemoryConfig& mem, std::size_t point )
{
    const auto x = current_positions( cloud, state.u );
    const auto hood = geometric_neighbors( cloud, x, point, horizon );
    Vec3 acc;
    for ( const auto& b : hood.neighbors )
        acc += b.weight *
               detail::fluid_bond_force( model, mem, b, state.v[b.j] - state.v[point] );
    return acc;
}

/*!
  \brief Time loop for the memory model.

  Infinite memory delegates to the bond-based velocity-Verlet Simulation,
  so both produce identical trajectories. Finite memory uses velocity
  Verlet with forces from the remembered configuration. Zero memory uses a
  kick-then-drift (symplectic Euler) step, since the force depends on the
  velocity.
*/
class FluidSimulation
{
  public:
    FluidSimulation( PointCloud cloud, HorizonConfig horizon, KernelModel model,
                     MemoryConfig memory, ExternalLoad load, double dt )
        : cloud_( std::move( cloud ) )
        , horizon_( horizon )
        , model_( std::move( model ) )
        , memory_( memory )
        , load_( std::move( load ) )
        , dt_( dt )
        , stride_( memory.stride( dt ) )
    {
        validate( memory_ );
        if ( !( dt > 0.0 ) )
            throw InputError( "time step must be positive" );
        if ( memory_.mode == MemoryMode::infinite )
        {
            solid_ = std::make_unique<Simulation>( cloud_, build_bonds( cloud_, horizon_ ),
                                                   model_, load_, dt_ );
        }
        state_.u.assign( cloud_.size(), Vec3{} );
        state_.v.assign( cloud_.size(), Vec3{} );
        reset_history();
    }

    void set_initial( std::vector<Vec3> u0, std::vector<Vec3> v0 )
    {
        if ( u0.size() != cloud_.size() || v0.size() != cloud_.size() )
            throw InputError( "initial fields must have one entry per point" );
        if ( solid_ )
            solid_->set_initial( u0, v0 );
        state_.u = std::move( u0 );
        state_.v = std::move( v0 );
        reset_history();
    }

    void step()
    {
        if ( solid_ )
        {
            solid_->step();
            state_.u = solid_->state().u;
            state_.v = solid_->state().v;
            state_.t = solid_->state().t;
            state_.step = solid_->state().step;
            return;
        }
        const std::size_t n = cloud_.size();
        const double rho = cloud_.density;
        const double t0 = state_.t, t1 = t0 + dt_;
        if ( memory_.mode == MemoryMode::zero )
        {
            const auto f = fluid_forces( cloud_, horizon_, model_, state_, memory_ );
            for ( std::size_t i = 0; i < n; ++i )
            {
                state_.v[i] += ( dt_ / rho ) * ( f[i] + load_( cloud_.positions[i], t0 ) );
                state_.u[i] += dt_ * state_.v[i];
            }
        }
        else
        {
            if ( !force_ )
                force_ = memory_forces( cloud_, horizon_, model_, state_, memory_, stride_ );
            for ( std::size_t i = 0; i < n; ++i )
            {
                state_.v[i] += ( 0.5 * dt_ / rho ) *
                               ( ( *force_ )[i] + load_( cloud_.positions[i], t0 ) );
                state_.u[i] += dt_ * state_.v[i];
            }
            ++state_.step;
            push_history();
            force_ = memory_forces( cloud_, horizon_, model_, state_, memory_, stride_ );
            --state_.step;
            for ( std::size_t i = 0; i < n; ++i )
                state_.v[i] += ( 0.5 * dt_ / rho ) *
                               ( ( *force_ )[i] + load_( cloud_.positions[i], t1 ) );
        }
        state_.t = t1;
        ++state_.step;
        if ( memory_.mode == MemoryMode::zero )
            push_history();
        for ( std::size_t i = 0; i < n; ++i )
            if ( !is_finite( state_.u[i] ) || !is_finite( state_.v[i] ) )
                throw SimulationError( "non-finite state at step " +
                                       std::to_string( state_.step ) );
    }

    //! Current force density (the integrand sum, without the load).
    std::vector<Vec3> force() const
    {
        if ( solid_ )
            return solid_->force();
        if ( memory_.mode == MemoryMode::zero )
            return fluid_forces( cloud_, horizon_, model_, state_, memory_ );
        return memory_forces( cloud_, horizon_, model_, state_, memory_, stride_ );
    }

    double kinetic_energy() const
    {
        double k = 0.0;
        for ( std::size_t i = 0; i < cloud_.size(); ++i )
            k += 0.5 * cloud_.mass( i ) * dot( state_.v[i], state_.v[i] );
        return k;
    }

    Vec3 momentum() const { return total_momentum( cloud_, state_.v ); }

    const PointCloud& cloud() const { return cloud_; }
    const FluidState& state() const { return state_; }
    const MemoryConfig& memory() const { return memory_; }
    const KernelModel& model() const { return model_; }
    const HorizonConfig& horizon() const { return horizon_; }
    std::size_t stride() const { return stride_; }
    double dt() const { return dt_; }
    //! The delegate bond-based simulation in infinite-memory mode.
    const Simulation* solid() const { return solid_.get(); }

  private:
    void reset_history()
    {
        state_.history.clear();
        force_.reset();
        if ( memory_.mode == MemoryMode::finite )
            state_.history.push_back( state_.u );
    }

    void push_history()
    {
        if ( memory_.mode != MemoryMode::finite )
            return;
        state_.history.push_back( state_.u );
        while ( state_.history.size() > stride_ + 1 )
            state_.history.pop_front();
    }

    PointCloud cloud_;
    HorizonConfig horizon_;
    KernelModel model_;
    MemoryConfig memory_;
    ExternalLoad load_;
    double dt_;
    std::size_t stride_;
    FluidState state_;
    std::unique_ptr<Simulation> solid_;
    std::optional<std::vector<Vec3>> force_;
};

} // namespace bbpd

#endif // BBPD_FLUIDPD_HPP
