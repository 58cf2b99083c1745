use semiprop::exactref::Grid;
use semiprop::rootsearch::{ScanLattice, ShootingGrid};
use semiprop::semiclassics::{BranchPolicy, Formula, SearchSettings, System};
use semiprop::{CoherentState, PotentialModel};

use crate::config::{list, Config, ConfigError};

const KNOWN_KEYS: &[&str] = &[
    "name",
    "potential.kind",
    "potential.a",
    "potential.b",
    "potential.omega",
    "potential.mass",
    "potential.wall",
    "state.q",
    "state.p",
    "state.b",
    "state.omega",
    "state.hbar",
    "state.mu",
    "times",
    "grid.x_min",
    "grid.x_max",
    "grid.step",
    "formulas",
    "exact.x_min",
    "exact.x_max",
    "exact.points",
    "exact.dt",
    "exact.leak_tolerance",
    "search.window",
    "search.step",
    "search.caustic_radius",
    "search.continuation_bound",
    "search.cut_margin",
    "search.branches",
    "search.coalescence",
    "search.near_caustic",
    "search.damping_cutoff",
    "search.p_span",
    "search.p_points",
    "search.q_span",
    "search.q_points",
    "integrator.rel_tol",
    "integrator.abs_tol",
];

/// Uniform grid of final positions, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XfGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl XfGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// Split-operator reference settings, used when no closed form exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactGridSpec {
    pub grid: Grid,
    pub dt: f64,
    pub leak_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub system: System,
    /// One packet per requested width.
    pub states: Vec<CoherentState>,
    pub times: Vec<f64>,
    pub x_grid: XfGrid,
    pub formulas: Vec<Formula>,
    pub exact: bool,
    pub exact_grid: ExactGridSpec,
    pub search: SearchSettings,
    /// Scan window half-width and step in units of `b`.
    pub window: (f64, f64),
    /// Shooting spans (in `c` and `b`) and point counts.
    pub shooting: ((f64, usize), (f64, usize)),
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::invalid(key, &x.to_string(), "must be positive"))
    }
}

impl Scenario {
    pub fn from_config(config: &Config) -> Result<Self, ConfigError> {
        if let Some(key) = config.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(ConfigError::Unknown(key.to_string()));
        }
        let name = config.get("name").unwrap_or("scenario").to_string();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(ConfigError::invalid("name", &name, "use letters, digits, `_`, `-` or `.`"));
        }

        let hbar = positive("state.hbar", config.f64_or("state.hbar", 1.0)?)?;
        let mu = positive("state.mu", config.f64_or("state.mu", 1.0)?)?;
        let q = config.f64("state.q")?;
        let p = config.f64("state.p")?;

        let kind = config.string("potential.kind")?;
        let model = match kind.to_ascii_lowercase().as_str() {
            "free" => PotentialModel::Free,
            "harmonic" => PotentialModel::Harmonic {
                mass: positive("potential.mass", config.f64_or("potential.mass", mu)?)?,
                omega: positive("potential.omega", config.f64("potential.omega")?)?,
            },
            "inverted_gaussian" => PotentialModel::InvertedGaussian,
            "quartic" => PotentialModel::Quartic { a: config.f64("potential.a")?, b: config.f64("potential.b")? },
            _ => {
                return Err(ConfigError::invalid(
                    "potential.kind",
                    kind,
                    "expected free, harmonic, inverted_gaussian or quartic",
                ))
            }
        };
        let wall = config.bool_or("potential.wall", false)?;
        if wall && model != PotentialModel::Free {
            return Err(ConfigError::invalid("potential.wall", "true", "the hard wall needs potential.kind = free"));
        }
        let system = if wall { System::HardWall } else { System::Smooth(model) };

        let states = match (config.get("state.b"), config.get("state.omega")) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid("state.omega", "", "give state.b or state.omega, not both"))
            }
            (None, None) => return Err(ConfigError::Missing("state.b".into())),
            (None, Some(_)) => {
                let omega = positive("state.omega", config.f64("state.omega")?)?;
                vec![CoherentState::new(q, p, hbar, mu, omega)
                    .map_err(|e| ConfigError::invalid("state.omega", &omega.to_string(), e.to_string()))?]
            }
            (Some(_), None) => config
                .f64_list("state.b")?
                .into_iter()
                .map(|b| {
                    CoherentState::with_width(q, p, positive("state.b", b)?, hbar, mu)
                        .map_err(|e| ConfigError::invalid("state.b", &b.to_string(), e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };

        let times = config.f64_list("times")?;
        if let Some(t) = times.iter().find(|t| **t < 0.0) {
            return Err(ConfigError::invalid("times", &t.to_string(), "times must be non-negative"));
        }

        let x_grid = XfGrid {
            min: config.f64("grid.x_min")?,
            max: config.f64("grid.x_max")?,
            step: positive("grid.step", config.f64("grid.step")?)?,
        };
        if !(x_grid.max > x_grid.min) {
            return Err(ConfigError::invalid("grid.x_max", &x_grid.max.to_string(), "must exceed grid.x_min"));
        }
        if wall && x_grid.min <= 0.0 {
            return Err(ConfigError::invalid("grid.x_min", &x_grid.min.to_string(), "the wall domain is x > 0"));
        }

        let raw_formulas = config.string("formulas")?;
        let mut formulas = Vec::new();
        let mut exact = false;
        for token in list(raw_formulas) {
            if token.eq_ignore_ascii_case("exact") {
                exact = true;
            } else {
                let f = Formula::parse(token)
                    .ok_or_else(|| ConfigError::invalid("formulas", token, "expected CT, QP, XFQ, XFP or EXACT"))?;
                if !formulas.contains(&f) {
                    formulas.push(f);
                }
            }
        }
        if formulas.is_empty() && !exact {
            return Err(ConfigError::invalid("formulas", raw_formulas, "no formula selected"));
        }

        let exact_grid = ExactGridSpec {
            grid: Grid::new(
                config.f64_or("exact.x_min", -40.0)?,
                config.f64_or("exact.x_max", 40.0)?,
                config.usize_or("exact.points", 2048)?,
            )
            .map_err(|e| ConfigError::invalid("exact.points", config.get("exact.points").unwrap_or("2048"), e.to_string()))?,
            dt: positive("exact.dt", config.f64_or("exact.dt", 1e-3)?)?,
            leak_tolerance: positive(
                "exact.leak_tolerance",
                config.f64_or("exact.leak_tolerance", semiprop::exactref::DEFAULT_LEAK_TOLERANCE)?,
            )?,
        };

        let mut search = SearchSettings::default();
        search.integrator.rel_tol = positive("integrator.rel_tol", config.f64_or("integrator.rel_tol", search.integrator.rel_tol)?)?;
        search.integrator.abs_tol = positive("integrator.abs_tol", config.f64_or("integrator.abs_tol", search.integrator.abs_tol)?)?;
        search.caustic_radius = positive("search.caustic_radius", config.f64_or("search.caustic_radius", search.caustic_radius)?)?;
        search.continuation_bound =
            positive("search.continuation_bound", config.f64_or("search.continuation_bound", search.continuation_bound)?)?;
        search.cut_margin = config.f64_or("search.cut_margin", search.cut_margin)?;
        if !(0.0..0.5).contains(&search.cut_margin) {
            return Err(ConfigError::invalid("search.cut_margin", &search.cut_margin.to_string(), "must lie in [0, 0.5)"));
        }
        search.coalescence = config.f64_or("search.coalescence", search.coalescence)?.max(0.0);
        search.near_caustic = config.f64_or("search.near_caustic", search.near_caustic)?.max(0.0);
        search.damping_cutoff = positive("search.damping_cutoff", config.f64_or("search.damping_cutoff", search.damping_cutoff)?)?;
        search.branches = match config.get("search.branches").map(str::to_ascii_lowercase).as_deref() {
            None | Some("main") => BranchPolicy::Main,
            Some("all") => BranchPolicy::All,
            Some(other) => return Err(ConfigError::invalid("search.branches", other, "expected main or all")),
        };
        let window = (
            positive("search.window", config.f64_or("search.window", 4.0)?)?,
            positive("search.step", config.f64_or("search.step", 0.05)?)?,
        );
        let shooting = (
            (
                positive("search.p_span", config.f64_or("search.p_span", 10.0)?)?,
                config.usize_or("search.p_points", 801)?.max(2),
            ),
            (
                positive("search.q_span", config.f64_or("search.q_span", 10.0)?)?,
                config.usize_or("search.q_points", 801)?.max(2),
            ),
        );

        Ok(Self { name, system, states, times, x_grid, formulas, exact, exact_grid, search, window, shooting })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let mut config = Config::load(path)?;
        config.apply_env();
        Self::from_config(&config)
    }

    /// Search settings with windows and shooting grids scaled to `state`.
    pub fn settings_for(&self, state: &CoherentState) -> SearchSettings {
        let mut s = self.search;
        let (b, c) = (state.b(), state.c());
        s.lattice = Some(ScanLattice::square(self.window.0 * b, self.window.1 * b));
        let ((p_span, p_n), (q_span, q_n)) = self.shooting;
        s.p_grid = Some(ShootingGrid::new(state.p() - p_span * c, state.p() + p_span * c, p_n));
        s.q_grid = Some(ShootingGrid::new(state.q() - q_span * b, state.q() + q_span * b, q_n));
        s
    }

    pub fn model(&self) -> PotentialModel {
        match self.system {
            System::Smooth(m) => m,
            System::HardWall => PotentialModel::Free,
        }
    }

    /// Every setting, defaults included, as a config that reproduces the run.
    pub fn resolved(&self) -> Config {
        let mut c = Config::default();
        let s0 = &self.states[0];
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
        c.set("name", self.name.clone());
        match self.model() {
            PotentialModel::Free => c.set("potential.kind", "free"),
            PotentialModel::Harmonic { mass, omega } => {
                c.set("potential.kind", "harmonic");
                c.set("potential.mass", format!("{mass}"));
                c.set("potential.omega", format!("{omega}"));
            }
            PotentialModel::InvertedGaussian => c.set("potential.kind", "inverted_gaussian"),
            PotentialModel::Quartic { a, b } => {
                c.set("potential.kind", "quartic");
                c.set("potential.a", format!("{a}"));
                c.set("potential.b", format!("{b}"));
            }
        }
        c.set("potential.wall", format!("{}", self.system == System::HardWall));
        c.set("state.q", format!("{}", s0.q()));
        c.set("state.p", format!("{}", s0.p()));
        c.set("state.hbar", format!("{}", s0.hbar()));
        c.set("state.mu", format!("{}", s0.mu()));
        c.set("state.b", join(&self.states.iter().map(|s| s.b()).collect::<Vec<_>>()));
        c.set("times", join(&self.times));
        c.set("grid.x_min", format!("{}", self.x_grid.min));
        c.set("grid.x_max", format!("{}", self.x_grid.max));
        c.set("grid.step", format!("{}", self.x_grid.step));
        let mut f: Vec<&str> = self.formulas.iter().map(|f| f.label()).collect();
        if self.exact {
            f.push("EXACT");
        }
        c.set("formulas", f.join(", "));
        let g = &self.exact_grid;
        c.set("exact.x_min", format!("{}", g.grid.x_min()));
        c.set("exact.x_max", format!("{}", g.grid.x_max()));
        c.set("exact.points", format!("{}", g.grid.n()));
        c.set("exact.dt", format!("{}", g.dt));
        c.set("exact.leak_tolerance", format!("{:e}", g.leak_tolerance));
        let s = &self.search;
        c.set("search.window", format!("{}", self.window.0));
        c.set("search.step", format!("{}", self.window.1));
        c.set("search.caustic_radius", format!("{}", s.caustic_radius));
        c.set("search.continuation_bound", format!("{}", s.continuation_bound));
        c.set("search.cut_margin", format!("{}", s.cut_margin));
        c.set("search.branches", if s.branches == BranchPolicy::Main { "main" } else { "all" });
        c.set("search.coalescence", format!("{}", s.coalescence));
        c.set("search.near_caustic", format!("{:e}", s.near_caustic));
        c.set("search.damping_cutoff", format!("{}", s.damping_cutoff));
        c.set("search.p_span", format!("{}", self.shooting.0 .0));
        c.set("search.p_points", format!("{}", self.shooting.0 .1));
        c.set("search.q_span", format!("{}", self.shooting.1 .0));
        c.set("search.q_points", format!("{}", self.shooting.1 .1));
        c.set("integrator.rel_tol", format!("{:e}", s.integrator.rel_tol));
        c.set("integrator.abs_tol", format!("{:e}", s.integrator.abs_tol));
        c
    }
}
