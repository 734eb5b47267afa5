#ifndef BBPD_CONFIG_HPP
#define BBPD_CONFIG_HPP

#include <bbpd/discretization.hpp>
#include <bbpd/fluidpd.hpp>
#include <bbpd/kernels.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bbpd
{

//! Configuration error carrying the offending section, key and line.
class ConfigError : public InputError
{
  public:
    ConfigError( std::string section, std::string key, int line,
                 const std::string& what )
        : InputError( format( section, key, line, what ) )
        , section_( std::move( section ) )
        , key_( std::move( key ) )
        , line_( line )
    {
    }

    const std::string& section() const { return section_; }
    const std::string& key() const { return key_; }
    int line() const { return line_; }

  private:
    static std::string format( const std::string& section, const std::string& key,
                               int line, const std::string& what )
    {
        std::string s;
        if ( line > 0 )
            s += "line " + std::to_string( line ) + ": ";
        if ( !section.empty() )
            s += "[" + section + "]";
        if ( !key.empty() )
            s += " " + key;
        if ( !s.empty() )
            s += ": ";
        return s + what;
    }

    std::string section_;
    std::string key_;
    int line_;
};

struct DomainSection
{
    int dim = 1;
    Vec3 box{ 1.0, 1.0, 1.0 };
    double h = 0.0;
    double density = 1.0;
    std::array<bool, 3> periodic{ false, false, false };
    bool operator==( const DomainSection& ) const = default;
};

struct HorizonSection
{
    double delta = 0.0;
    PartialVolume partial_volume = PartialVolume::linear;
    bool operator==( const HorizonSection& ) const = default;
};

struct KernelSection
{
    std::string family;
    MicroModulusFamily micromodulus = MicroModulusFamily::cylindrical;
    //! Numeric family parameters keyed as in the config file.
    std::map<std::string, double> params;
    bool operator==( const KernelSection& ) const = default;
};

struct BreakerSection
{
    BreakerMode mode = BreakerMode::none;
    double s0 = infinity;
    double eps = 1.0;
    bool operator==( const BreakerSection& ) const = default;
};

struct LoadSection
{
    //! none | constant | sinusoidal | tension
    std::string preset = "none";
    Vec3 vector;
    double wavenumber = 0.0;
    int axis = 0;
    double magnitude = 0.0;
    double band = 0.0;
    double ramp = 0.0;
    bool operator==( const LoadSection& ) const = default;
};

struct TimeSection
{
    //! Empty means the stable step scaled by `safety`.
    std::optional<double> dt;
    double safety = 0.5;
    std::size_t steps = 0;
    std::size_t record_every = 1;
    bool operator==( const TimeSection& ) const = default;
};

struct MemorySection
{
    MemoryMode mode = MemoryMode::infinite;
    double s = infinity;
    double coefficient = 1.0;
    FluidKernel kernel = FluidKernel::linear;
    bool operator==( const MemorySection& ) const = default;

    MemoryConfig to_memory() const { return { mode, s, coefficient, kernel }; }
};

struct OutputSection
{
    std::string directory = "out";
    //! 0 writes snapshots at the first and last step only.
    std::size_t snapshot_every = 0;
    bool operator==( const OutputSection& ) const = default;
};

struct ScenarioSection
{
    //! Empty, bar1d-wave, plate2d-precrack or fluid-shear.
    std::string preset;
    //! Initial wave or velocity amplitude.
    double amplitude = 0.0;
    //! Seeded crack length as a fraction of the plate width.
    double crack_length = 0.0;
    bool operator==( const ScenarioSection& ) const = default;
};

struct RunConfig
{
    DomainSection domain;
    HorizonSection horizon;
    KernelSection kernel;
    BreakerSection breaker;
    LoadSection load;
    TimeSection time;
    MemorySection memory;
    OutputSection output;
    ScenarioSection scenario;
    bool operator==( const RunConfig& ) const = default;
};

inline constexpr std::string_view scenario_presets[] = { "bar1d-wave",
                                                         "plate2d-precrack",
                                                         "fluid-shear" };

//---------------------------------------------------------------------------//
// Enum spellings.
//---------------------------------------------------------------------------//
namespace detail
{

template <class E>
struct Spelling
{
    E value;
    std::string_view name;
};

inline constexpr Spelling<MicroModulusFamily> micromodulus_names[] = {
    { MicroModulusFamily::cylindrical, "cylindrical" },
    { MicroModulusFamily::triangular, "triangular" },
    { MicroModulusFamily::normal, "normal" },
    { MicroModulusFamily::quartic, "quartic" } };

inline constexpr Spelling<BreakerMode> breaker_names[] = {
    { BreakerMode::none, "none" },
    { BreakerMode::critical_stretch, "critical_stretch" },
    { BreakerMode::theta_eps, "theta_eps" } };

inline constexpr Spelling<PartialVolume> partial_volume_names[] = {
    { PartialVolume::none, "none" }, { PartialVolume::linear, "linear" } };

inline constexpr Spelling<MemoryMode> memory_names[] = {
    { MemoryMode::infinite, "infinite" },
    { MemoryMode::finite, "finite" },
    { MemoryMode::zero, "zero" } };

inline constexpr Spelling<FluidKernel> fluid_kernel_names[] = {
    { FluidKernel::linear, "linear" }, { FluidKernel::solid, "solid" } };

template <class E, std::size_t N>
std::string_view name_of( const Spelling<E> ( &table )[N], E value )
{
    for ( const auto& s : table )
        if ( s.value == value )
            return s.name;
    return "?";
}

inline std::string trim( std::string_view s )
{
    const auto b = s.find_first_not_of( " \t\r" );
    if ( b == std::string_view::npos )
        return {};
    const auto e = s.find_last_not_of( " \t\r" );
    return std::string( s.substr( b, e - b + 1 ) );
}

inline std::vector<std::string> split_words( const std::string& s )
{
    std::istringstream in( s );
    std::vector<std::string> out;
    for ( std::string w; in >> w; )
        out.push_back( w );
    return out;
}

inline std::string fmt( double v )
{
    char buf[32];
    std::snprintf( buf, sizeof buf, "%.17g", v );
    return buf;
}

struct Entry
{
    std::string value;
    int line = 0;
    bool used = false;
};

//! Raw key/value entries of one section plus typed accessors.
class Section
{
  public:
    Section() = default;
    explicit Section( std::string name )
        : name_( std::move( name ) )
    {
    }

    void add( const std::string& key, std::string value, int line )
    {
        if ( auto it = entries_.find( key ); it != entries_.end() )
            throw ConfigError( name_, key, line,
                               "duplicate key (first set on line " +
                                   std::to_string( it->second.line ) + ")" );
        entries_[key] = { std::move( value ), line, false };
    }

    bool has( const std::string& key ) const { return entries_.count( key ) != 0; }

    int line_of( const std::string& key ) const
    {
        auto it = entries_.find( key );
        return it == entries_.end() ? 0 : it->second.line;
    }

    [[noreturn]] void fail( const std::string& key, const std::string& what ) const
    {
        throw ConfigError( name_, key, line_of( key ), what );
    }

    std::optional<std::string> text( const std::string& key )
    {
        auto it = entries_.find( key );
        if ( it == entries_.end() )
            return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }

    std::optional<double> number( const std::string& key )
    {
        auto t = text( key );
        if ( !t )
            return std::nullopt;
        return parse_double( key, *t );
    }

    double required_number( const std::string& key )
    {
        auto v = number( key );
        if ( !v )
            fail( key, "required key is missing" );
        return *v;
    }

    std::optional<long long> integer( const std::string& key )
    {
        auto t = text( key );
        if ( !t )
            return std::nullopt;
        long long v = 0;
        const char* b = t->data();
        const char* e = b + t->size();
        auto [p, ec] = std::from_chars( b, e, v );
        if ( ec != std::errc() || p != e )
            fail( key, "expected an integer, got '" + *t + "'" );
        return v;
    }

    std::optional<bool> boolean( const std::string& key )
    {
        auto t = text( key );
        if ( !t )
            return std::nullopt;
        return parse_bool( key, *t );
    }

    std::vector<double> numbers( const std::string& key )
    {
        std::vector<double> out;
        if ( auto t = text( key ) )
            for ( const auto& w : split_words( *t ) )
                out.push_back( parse_double( key, w ) );
        return out;
    }

    std::vector<bool> booleans( const std::string& key )
    {
        std::vector<bool> out;
        if ( auto t = text( key ) )
            for ( const auto& w : split_words( *t ) )
                out.push_back( parse_bool( key, w ) );
        return out;
    }

    template <class E, std::size_t N>
    std::optional<E> choice( const std::string& key, const Spelling<E> ( &table )[N] )
    {
        auto t = text( key );
        if ( !t )
            return std::nullopt;
        std::string allowed;
        for ( const auto& s : table )
        {
            if ( s.name == *t )
                return s.value;
            allowed += ( allowed.empty() ? "" : ", " ) + std::string( s.name );
        }
        fail( key, "unknown value '" + *t + "' (expected one of " + allowed + ")" );
    }

    //! Reject keys that no accessor consumed.
    void check_unused() const
    {
        for ( const auto& [key, e] : entries_ )
            if ( !e.used )
                throw ConfigError( name_, key, e.line, "unknown key" );
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }

  private:
    double parse_double( const std::string& key, const std::string& t ) const
    {
        double v = 0.0;
        const char* b = t.data();
        const char* e = b + t.size();
        if ( b != e && *b == '+' )
            ++b;
        auto [p, ec] = std::from_chars( b, e, v );
        if ( ec != std::errc() || p != e || std::isnan( v ) )
            fail( key, "expected a number, got '" + t + "'" );
        return v;
    }

    bool parse_bool( const std::string& key, const std::string& t ) const
    {
        if ( t == "true" || t == "1" || t == "yes" )
            return true;
        if ( t == "false" || t == "0" || t == "no" )
            return false;
        fail( key, "expected true or false, got '" + t + "'" );
    }

    std::string name_;
    std::map<std::string, Entry> entries_;
};

inline constexpr std::string_view section_names[] = {
    "domain", "horizon", "kernel", "breaker", "load",
    "time",   "memory",  "output", "scenario" };

//! Keys each kernel family accepts besides `family`.
inline std::set<std::string> kernel_keys( const std::string& family )
{
    if ( family == "anti_plane_shear" )
        return { "c", "u_star" };
    if ( family == "quadratic_potential" )
        return { "alpha" };
    if ( family == "pmb" )
        return { "c0", "bulk_modulus", "micromodulus" };
    if ( family == "constructive_rod" )
        return { "c0", "micromodulus" };
    if ( family == "convolution" )
        return { "c0", "r", "micromodulus" };
    if ( family == "nonlinear_p" )
        return { "kappa", "p", "alpha" };
    if ( family == "nano_membrane" )
        return { "c", "g" };
    if ( family == "nano_fiber" )
        return { "c", "g", "alpha_vdw", "beta_vdw" };
    return {};
}

inline bool family_uses_breaker( const std::string& family )
{
    return family == "pmb" || family == "nano_membrane" || family == "nano_fiber";
}

} // namespace detail

/*!
  \brief Assemble the kernel described by a validated configuration.
  PMB with `bulk_modulus` (3D only) is calibrated to the horizon.
*/
inline KernelModel make_kernel( const RunConfig& cfg )
{
    const auto& k = cfg.kernel;
    const double delta = cfg.horizon.delta;
    auto param = [&]( const std::string& key, double fallback ) {
        auto it = k.params.find( key );
        return it == k.params.end() ? fallback : it->second;
    };
    const BondBreaker breaker{ cfg.breaker.mode, cfg.breaker.s0, cfg.breaker.eps };
    auto micromodulus = [&]() {
        double c0 = param( "c0", 0.0 );
        if ( k.params.count( "bulk_modulus" ) )
            c0 = calibrate_pmb_c( k.params.at( "bulk_modulus" ), delta );
        return MicroModulus{ k.micromodulus, c0, delta };
    };

    if ( k.family == "anti_plane_shear" )
        return AntiPlaneShear{ param( "c", 1.0 ), param( "u_star", infinity ), delta };
    if ( k.family == "quadratic_potential" )
        return QuadraticPotential{ param( "alpha", 1.0 ), {}, delta };
    if ( k.family == "pmb" )
        return PMB{ micromodulus(), breaker };
    if ( k.family == "constructive_rod" )
        return ConstructiveRod{ micromodulus() };
    if ( k.family == "convolution" )
        return Convolution( micromodulus(), static_cast<int>( param( "r", 3.0 ) ) );
    if ( k.family == "nonlinear_p" )
        return NonlinearP( param( "kappa", 1.0 ), param( "p", 2.0 ),
                           param( "alpha", 0.5 ), cfg.domain.dim, delta );
    if ( k.family == "nano_membrane" )
        return NanoMembrane{ param( "c", 1.0 ), param( "g", 1.0 ), breaker, delta };
    if ( k.family == "nano_fiber" )
        return NanoFiber{ param( "c", 1.0 ),         param( "g", 1.0 ),
                          param( "alpha_vdw", 0.0 ), param( "beta_vdw", 0.0 ),
                          delta,                     breaker };
    throw ConfigError( "kernel", "family", 0, "unknown family '" + k.family + "'" );
}

namespace detail
{

inline void validate_kernel( Section& sec, RunConfig& cfg )
{
    auto& k = cfg.kernel;
    const auto allowed = kernel_keys( k.family );
    if ( allowed.empty() )
    {
        std::string names;
        for ( auto n : family_names )
            names += ( names.empty() ? "" : ", " ) + std::string( n );
        sec.fail( "family", "unknown family '" + k.family + "' (expected one of " +
                                names + ")" );
    }
    for ( const auto& [key, e] : sec.entries() )
        if ( key != "family" && !allowed.count( key ) )
            throw ConfigError( "kernel", key, e.line,
                               "unknown key for family " + k.family );

    if ( auto mm = sec.choice( "micromodulus", micromodulus_names ) )
        k.micromodulus = *mm;
    for ( const auto& key : allowed )
        if ( key != "micromodulus" )
            if ( auto v = sec.number( key ) )
                k.params[key] = *v;

    auto need = [&]( const std::string& key ) {
        if ( !k.params.count( key ) )
            sec.fail( key, "required for family " + k.family );
        return k.params.at( key );
    };
    auto positive = [&]( const std::string& key ) {
        const double v = need( key );
        if ( !( v > 0.0 ) || !std::isfinite( v ) )
            sec.fail( key, "must be finite and > 0" );
    };

    const std::string& f = k.family;
    if ( f == "pmb" || f == "constructive_rod" || f == "convolution" )
    {
        const bool bulk = k.params.count( "bulk_modulus" ) != 0;
        if ( bulk && f == "pmb" )
        {
            if ( cfg.domain.dim != 3 )
                sec.fail( "bulk_modulus", "calibration is three-dimensional; "
                                          "give c0 for dim < 3" );
            if ( k.params.count( "c0" ) )
                sec.fail( "bulk_modulus", "give either c0 or bulk_modulus, not both" );
            positive( "bulk_modulus" );
        }
        else
            positive( "c0" );
        if ( f == "convolution" )
        {
            const double r = need( "r" );
            if ( r != std::floor( r ) || r <= 1.0 || std::fmod( r, 2.0 ) == 0.0 )
                sec.fail( "r", "must be an odd integer > 1" );
        }
    }
    else if ( f == "anti_plane_shear" )
    {
        positive( "c" );
        positive( "u_star" );
    }
    else if ( f == "quadratic_potential" )
    {
        const double a = need( "alpha" );
        if ( !std::isfinite( a ) )
            sec.fail( "alpha", "must be finite" );
    }
    else if ( f == "nonlinear_p" )
    {
        positive( "kappa" );
        if ( !( need( "p" ) >= 2.0 ) || !std::isfinite( k.params["p"] ) )
            sec.fail( "p", "must satisfy p ≥ 2" );
        const double a = need( "alpha" );
        if ( !( a > 0.0 && a < 1.0 ) )
            sec.fail( "alpha", "must satisfy α ∈ (0,1), got " + fmt( a ) );
    }
    else if ( f == "nano_membrane" || f == "nano_fiber" )
    {
        positive( "c" );
        positive( "g" );
        if ( f == "nano_fiber" )
            for ( const char* key : { "alpha_vdw", "beta_vdw" } )
            {
                const double v = need( key );
                if ( !( v >= 0.0 ) || !std::isfinite( v ) )
                    sec.fail( key, "must be finite and >= 0" );
            }
    }
}

} // namespace detail

/*!
  \brief Parse the line-oriented `[section]` / `key = value` format.

  `#` and `;` start comments. When `[scenario] preset` names a shipped
  preset, its settings are the defaults and every other key overrides them.
*/
inline RunConfig parse_config( std::string_view text );

namespace detail
{

inline std::map<std::string, Section> read_sections( std::string_view text )
{
    std::map<std::string, Section> sections;
    Section* current = nullptr;
    std::string current_name;
    int line_no = 0;
    std::size_t pos = 0;
    while ( pos <= text.size() )
    {
        const auto eol = text.find( '\n', pos );
        std::string_view raw = text.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos );
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        const auto hash = raw.find_first_of( "#;" );
        const std::string line = trim( raw.substr( 0, hash ) );
        if ( line.empty() )
            continue;
        if ( line.front() == '[' )
        {
            if ( line.back() != ']' )
                throw ConfigError( "", "", line_no, "malformed section header" );
            current_name = trim( std::string_view( line ).substr( 1, line.size() - 2 ) );
            if ( std::find( std::begin( section_names ), std::end( section_names ),
                            current_name ) == std::end( section_names ) )
                throw ConfigError( current_name, "", line_no, "unknown section" );
            current = &sections.try_emplace( current_name, current_name ).first->second;
            continue;
        }
        const auto eq = line.find( '=' );
        if ( eq == std::string::npos )
            throw ConfigError( current_name, "", line_no, "expected 'key = value'" );
        const std::string key = trim( std::string_view( line ).substr( 0, eq ) );
        const std::string value = trim( std::string_view( line ).substr( eq + 1 ) );
        if ( !current )
            throw ConfigError( "", key, line_no, "key outside of any section" );
        if ( key.empty() )
            throw ConfigError( current_name, "", line_no, "empty key" );
        if ( value.empty() )
            throw ConfigError( current_name, key, line_no, "empty value" );
        current->add( key, value, line_no );
    }
    return sections;
}

//! Settings of a shipped scenario preset, before overrides.
inline RunConfig preset_config( const std::string& name )
{
    RunConfig c;
    c.scenario.preset = name;
    if ( name == "bar1d-wave" )
    {
        c.domain = { 1, { 1.0, 1.0, 1.0 }, 0.025, 1.0, { true, false, false } };
        c.horizon = { 0.1, PartialVolume::linear };
        c.kernel.family = "pmb";
        c.kernel.params["c0"] = 200.0;
        c.time = { std::nullopt, 0.5, 400, 10 };
        c.scenario.amplitude = 1e-3;
    }
    else if ( name == "plate2d-precrack" )
    {
        c.domain = { 2, { 1.0, 1.0, 1.0 }, 1.0 / 64.0, 1.0, { false, false, false } };
        c.horizon = { 3.015 / 64.0, PartialVolume::linear };
        c.kernel.family = "pmb";
        c.kernel.params["c0"] = 27400.0;
        c.breaker = { BreakerMode::critical_stretch, 0.01, 1.0 };
        c.load.preset = "tension";
        c.load.axis = 1;
        c.load.magnitude = 0.09;
        c.load.band = 3.0 / 64.0;
        c.load.ramp = 4.0;
        c.time = { std::nullopt, 0.5, 2000, 50 };
        c.output.snapshot_every = 500;
        c.scenario.crack_length = 0.3;
    }
    else if ( name == "fluid-shear" )
    {
        c.domain = { 2, { 1.0, 1.0, 1.0 }, 1.0 / 32.0, 1.0, { true, true, false } };
        c.horizon = { 3.0 / 32.0, PartialVolume::linear };
        c.kernel.family = "pmb";
        c.kernel.params["c0"] = 1.0;
        c.memory = { MemoryMode::zero, 0.0, 1000.0, FluidKernel::linear };
        c.time = { 1e-3, 0.5, 2000, 20 };
        c.scenario.amplitude = 0.1;
    }
    else
        throw ConfigError( "scenario", "preset", 0, "unknown preset '" + name + "'" );
    return c;
}

} // namespace detail

inline RunConfig parse_config( std::string_view text )
{
    auto sections = detail::read_sections( text );
    auto sec = [&]( const char* name ) -> detail::Section& {
        return sections.try_emplace( name, name ).first->second;
    };

    RunConfig cfg;
    auto& scenario = sec( "scenario" );
    if ( auto p = scenario.text( "preset" ) )
    {
        if ( std::find( std::begin( scenario_presets ), std::end( scenario_presets ),
                        *p ) == std::end( scenario_presets ) )
            scenario.fail( "preset", "unknown preset '" + *p + "'" );
        cfg = detail::preset_config( *p );
    }
    if ( auto v = scenario.number( "amplitude" ) )
        cfg.scenario.amplitude = *v;
    if ( auto v = scenario.number( "crack_length" ) )
    {
        if ( !( *v >= 0.0 && *v <= 1.0 ) )
            scenario.fail( "crack_length", "must lie in [0, 1]" );
        cfg.scenario.crack_length = *v;
    }
    if ( !std::isfinite( cfg.scenario.amplitude ) )
        scenario.fail( "amplitude", "must be finite" );

    // [domain]
    auto& domain = sec( "domain" );
    if ( auto v = domain.integer( "dim" ) )
    {
        if ( *v < 1 || *v > 3 )
            domain.fail( "dim", "must be 1, 2 or 3" );
        cfg.domain.dim = static_cast<int>( *v );
    }
    else if ( cfg.scenario.preset.empty() )
        domain.fail( "dim", "required key is missing" );
    const int dim = cfg.domain.dim;
    if ( domain.has( "box" ) )
    {
        const auto b = domain.numbers( "box" );
        if ( static_cast<int>( b.size() ) != dim )
            domain.fail( "box", "expected " + std::to_string( dim ) + " values" );
        cfg.domain.box = { 1.0, 1.0, 1.0 };
        for ( int a = 0; a < dim; ++a )
        {
            if ( !( b[a] > 0.0 ) || !std::isfinite( b[a] ) )
                domain.fail( "box", "extents must be finite and > 0" );
            cfg.domain.box[a] = b[a];
        }
    }
    else if ( cfg.scenario.preset.empty() )
        domain.fail( "box", "required key is missing" );
    if ( auto v = domain.number( "h" ) )
        cfg.domain.h = *v;
    else if ( cfg.scenario.preset.empty() )
        domain.fail( "h", "required key is missing" );
    if ( !( cfg.domain.h > 0.0 ) || !std::isfinite( cfg.domain.h ) )
        domain.fail( "h", "must be finite and > 0" );
    if ( auto v = domain.number( "density" ) )
        cfg.domain.density = *v;
    if ( !( cfg.domain.density > 0.0 ) || !std::isfinite( cfg.domain.density ) )
        domain.fail( "density", "must be finite and > 0" );
    if ( domain.has( "periodic" ) )
    {
        const auto p = domain.booleans( "periodic" );
        if ( p.size() != 1 && static_cast<int>( p.size() ) != dim )
            domain.fail( "periodic", "expected 1 or " + std::to_string( dim ) + " values" );
        cfg.domain.periodic = { false, false, false };
        for ( int a = 0; a < dim; ++a )
            cfg.domain.periodic[a] = p.size() == 1 ? p[0] : p[a];
    }
    for ( int a = 0; a < dim; ++a )
    {
        const double cells = cfg.domain.box[a] / cfg.domain.h;
        if ( std::abs( cells - std::round( cells ) ) > 1e-9 * std::max( 1.0, cells ) ||
             std::round( cells ) < 1.0 )
            domain.fail( "h", "box extents must be integer multiples of h" );
    }

    // [horizon]
    auto& horizon = sec( "horizon" );
    if ( auto v = horizon.number( "delta" ) )
        cfg.horizon.delta = *v;
    else if ( cfg.scenario.preset.empty() )
        horizon.fail( "delta", "required key is missing" );
    if ( !( cfg.horizon.delta > 0.0 ) || !std::isfinite( cfg.horizon.delta ) )
        horizon.fail( "delta", "must be finite and > 0" );
    if ( cfg.horizon.delta < cfg.domain.h )
        horizon.fail( "delta", "must be at least the grid spacing h" );
    for ( int a = 0; a < dim; ++a )
        if ( cfg.domain.periodic[a] && !( cfg.horizon.delta < 0.5 * cfg.domain.box[a] ) )
            horizon.fail( "delta", "must be below half the periodic box extent" );
    if ( auto v = horizon.choice( "partial_volume", detail::partial_volume_names ) )
        cfg.horizon.partial_volume = *v;

    // [kernel]
    auto& kernel = sec( "kernel" );
    if ( auto f = kernel.text( "family" ) )
    {
        if ( *f != cfg.kernel.family )
            cfg.kernel = KernelSection{ *f, MicroModulusFamily::cylindrical, {} };
    }
    else if ( cfg.scenario.preset.empty() )
        kernel.fail( "family", "required key is missing" );
    {
        // Explicit parameters replace the preset's entry by entry.
        auto preset_params = cfg.kernel.params;
        cfg.kernel.params.clear();
        detail::Section merged( "kernel" );
        for ( const auto& [key, e] : kernel.entries() )
            if ( key != "family" )
                merged.add( key, e.value, e.line );
        for ( const auto& [key, v] : preset_params )
            if ( !merged.has( key ) &&
                 !( key == "c0" && merged.has( "bulk_modulus" ) ) )
                merged.add( key, detail::fmt( v ), 0 );
        detail::validate_kernel( merged, cfg );
        merged.check_unused();
        for ( const auto& [key, e] : kernel.entries() )
            kernel.text( key );
    }

    // [breaker]
    auto& breaker = sec( "breaker" );
    if ( auto v = breaker.choice( "mode", detail::breaker_names ) )
        cfg.breaker.mode = *v;
    if ( auto v = breaker.number( "s0" ) )
        cfg.breaker.s0 = *v;
    if ( auto v = breaker.number( "eps" ) )
        cfg.breaker.eps = *v;
    if ( cfg.breaker.mode != BreakerMode::none )
    {
        if ( !detail::family_uses_breaker( cfg.kernel.family ) )
            breaker.fail( "mode", "family " + cfg.kernel.family +
                                      " does not support bond breaking" );
        if ( !( cfg.breaker.s0 > 0.0 ) || !std::isfinite( cfg.breaker.s0 ) )
            breaker.fail( "s0", "must be finite and > 0 when breaking is enabled" );
    }
    if ( !( cfg.breaker.eps > 0.0 ) || !std::isfinite( cfg.breaker.eps ) )
        breaker.fail( "eps", "must be finite and > 0" );

    // [load]
    auto& load = sec( "load" );
    if ( auto p = load.text( "preset" ) )
    {
        if ( *p != cfg.load.preset )
        {
            cfg.load = LoadSection{};
            cfg.load.preset = *p;
        }
    }
    const std::string& lp = cfg.load.preset;
    if ( lp != "none" && lp != "constant" && lp != "sinusoidal" && lp != "tension" )
        load.fail( "preset", "unknown preset '" + lp +
                                 "' (expected none, constant, sinusoidal, tension)" );
    auto read_axis = [&]() {
        if ( auto v = load.integer( "axis" ) )
        {
            if ( *v < 0 || *v >= dim )
                load.fail( "axis", "must lie in [0, dim)" );
            cfg.load.axis = static_cast<int>( *v );
        }
    };
    if ( lp == "constant" || lp == "sinusoidal" )
    {
        const char* key = lp == "constant" ? "b" : "amplitude";
        if ( load.has( key ) )
        {
            const auto b = load.numbers( key );
            if ( static_cast<int>( b.size() ) != dim )
                load.fail( key, "expected " + std::to_string( dim ) + " values" );
            cfg.load.vector = {};
            for ( int a = 0; a < dim; ++a )
                cfg.load.vector[a] = b[a];
        }
        if ( lp == "sinusoidal" )
        {
            if ( auto v = load.number( "wavenumber" ) )
                cfg.load.wavenumber = *v;
            read_axis();
        }
    }
    else if ( lp == "tension" )
    {
        read_axis();
        if ( auto v = load.number( "magnitude" ) )
            cfg.load.magnitude = *v;
        if ( auto v = load.number( "band" ) )
            cfg.load.band = *v;
        if ( auto v = load.number( "ramp" ) )
            cfg.load.ramp = *v;
        if ( !( cfg.load.band > 0.0 ) )
            load.fail( "band", "must be > 0" );
        if ( cfg.load.ramp < 0.0 )
            load.fail( "ramp", "must be >= 0" );
    }

    // [time]
    auto& time = sec( "time" );
    if ( auto t = time.text( "dt" ) )
    {
        if ( *t == "auto" )
            cfg.time.dt.reset();
        else
        {
            const double dt = *time.number( "dt" );
            if ( !( dt > 0.0 ) || !std::isfinite( dt ) )
                time.fail( "dt", "must be finite and > 0, or auto" );
            cfg.time.dt = dt;
        }
    }
    if ( auto v = time.number( "safety" ) )
    {
        if ( !( *v > 0.0 && *v <= 1.0 ) )
            time.fail( "safety", "must lie in (0, 1]" );
        cfg.time.safety = *v;
    }
    if ( auto v = time.integer( "steps" ) )
    {
        if ( *v < 0 )
            time.fail( "steps", "must be >= 0" );
        cfg.time.steps = static_cast<std::size_t>( *v );
    }
    if ( auto v = time.integer( "record_every" ) )
    {
        if ( *v < 1 )
            time.fail( "record_every", "must be >= 1" );
        cfg.time.record_every = static_cast<std::size_t>( *v );
    }

    // [memory]
    auto& memory = sec( "memory" );
    if ( auto v = memory.choice( "mode", detail::memory_names ) )
        cfg.memory.mode = *v;
    if ( auto v = memory.number( "s" ) )
    {
        if ( *v < 0.0 )
            memory.fail( "s", "must be >= 0" );
        cfg.memory.s = *v;
    }
    if ( auto v = memory.number( "coefficient" ) )
    {
        if ( !std::isfinite( *v ) )
            memory.fail( "coefficient", "must be finite" );
        cfg.memory.coefficient = *v;
    }
    if ( auto v = memory.choice( "kernel", detail::fluid_kernel_names ) )
        cfg.memory.kernel = *v;
    if ( cfg.memory.mode == MemoryMode::finite &&
         !( cfg.memory.s > 0.0 && std::isfinite( cfg.memory.s ) ) )
        memory.fail( "s", "finite mode needs 0 < s < inf" );

    // [output]
    auto& output = sec( "output" );
    if ( auto v = output.text( "directory" ) )
        cfg.output.directory = *v;
    if ( auto v = output.integer( "snapshot_every" ) )
    {
        if ( *v < 0 )
            output.fail( "snapshot_every", "must be >= 0" );
        cfg.output.snapshot_every = static_cast<std::size_t>( *v );
    }

    for ( const auto& [name, s] : sections )
        s.check_unused();

    try
    {
        make_kernel( cfg );
    }
    catch ( const ConfigError& )
    {
        throw;
    }
    catch ( const InputError& e )
    {
        throw ConfigError( "kernel", "", 0, e.what() );
    }
    return cfg;
}

//! Normalized text form; parse_config(print_config(c)) == c.
inline std::string print_config( const RunConfig& c )
{
    using detail::fmt;
    using detail::name_of;
    std::string out;
    auto line = [&]( const std::string& key, const std::string& value ) {
        out += key + " = " + value + "\n";
    };
    auto vec = [&]( const Vec3& v ) {
        std::string s;
        for ( int a = 0; a < c.domain.dim; ++a )
            s += ( a ? " " : "" ) + fmt( v[a] );
        return s;
    };

    if ( !c.scenario.preset.empty() || c.scenario.amplitude != 0.0 ||
         c.scenario.crack_length != 0.0 )
    {
        out += "[scenario]\n";
        if ( !c.scenario.preset.empty() )
            line( "preset", c.scenario.preset );
        line( "amplitude", fmt( c.scenario.amplitude ) );
        line( "crack_length", fmt( c.scenario.crack_length ) );
        out += "\n";
    }

    out += "[domain]\n";
    line( "dim", std::to_string( c.domain.dim ) );
    line( "box", vec( c.domain.box ) );
    line( "h", fmt( c.domain.h ) );
    line( "density", fmt( c.domain.density ) );
    {
        std::string p;
        for ( int a = 0; a < c.domain.dim; ++a )
            p += std::string( a ? " " : "" ) + ( c.domain.periodic[a] ? "true" : "false" );
        line( "periodic", p );
    }

    out += "\n[horizon]\n";
    line( "delta", fmt( c.horizon.delta ) );
    line( "partial_volume",
          std::string( name_of( detail::partial_volume_names, c.horizon.partial_volume ) ) );

    out += "\n[kernel]\n";
    line( "family", c.kernel.family );
    if ( detail::kernel_keys( c.kernel.family ).count( "micromodulus" ) )
        line( "micromodulus",
              std::string( name_of( detail::micromodulus_names, c.kernel.micromodulus ) ) );
    for ( const auto& [key, v] : c.kernel.params )
        line( key, fmt( v ) );

    out += "\n[breaker]\n";
    line( "mode", std::string( name_of( detail::breaker_names, c.breaker.mode ) ) );
    line( "s0", fmt( c.breaker.s0 ) );
    line( "eps", fmt( c.breaker.eps ) );

    out += "\n[load]\n";
    line( "preset", c.load.preset );
    if ( c.load.preset == "constant" )
        line( "b", vec( c.load.vector ) );
    else if ( c.load.preset == "sinusoidal" )
    {
        line( "amplitude", vec( c.load.vector ) );
        line( "wavenumber", fmt( c.load.wavenumber ) );
        line( "axis", std::to_string( c.load.axis ) );
    }
    else if ( c.load.preset == "tension" )
    {
        line( "axis", std::to_string( c.load.axis ) );
        line( "magnitude", fmt( c.load.magnitude ) );
        line( "band", fmt( c.load.band ) );
        line( "ramp", fmt( c.load.ramp ) );
    }

    out += "\n[time]\n";
    line( "dt", c.time.dt ? fmt( *c.time.dt ) : "auto" );
    line( "safety", fmt( c.time.safety ) );
    line( "steps", std::to_string( c.time.steps ) );
    line( "record_every", std::to_string( c.time.record_every ) );

    out += "\n[memory]\n";
    line( "mode", std::string( name_of( detail::memory_names, c.memory.mode ) ) );
    line( "s", fmt( c.memory.s ) );
    line( "coefficient", fmt( c.memory.coefficient ) );
    line( "kernel", std::string( name_of( detail::fluid_kernel_names, c.memory.kernel ) ) );

    out += "\n[output]\n";
    line( "directory", c.output.directory );
    line( "snapshot_every", std::to_string( c.output.snapshot_every ) );
    return out;
}

} // namespace bbpd

#endif // BBPD_CONFIG_HPP
