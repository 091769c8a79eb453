//! Environment reaction-force models.
//!
//! Four interchangeable laws map a link's local center-of-mass velocity to a
//! local reaction force (and, for the fluid model, an anisotropic mass
//! matrix). Local 2-vectors are `(x, y) = (transverse, longitudinal)`,
//! matching [`crate::types::LinkFrame`].
//!
//! All models are dissipative (`f·v ≤ 0`) and odd (`f(-v) = -f(v)`). Sign
//! functions are smoothed with `tanh(v/ε)` so the forces stay differentiable
//! for finite-difference linearization; the smooth dry-friction model is
//! additionally regularized near `v = 0` through its normalization term.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};
use crate::scalar::{real, Real};
use crate::types::SnakeParams;

/// Velocity scale of the smoothed sign function \[m/s\].
pub const SGN_SMOOTHING: f64 = 1e-3;

/// The smooth dry-friction normalization is regularized with
/// `ε_N = m·g·NORMALIZATION_EPS` so the force vanishes continuously at rest.
pub const NORMALIZATION_EPS: f64 = 1e-4;

#[inline]
fn smooth_sgn<R: Real>(v: R) -> R {
    (v / real(SGN_SMOOTHING)).tanh()
}

/// Component-wise Coulomb friction with independent longitudinal and
/// transverse coefficients.
///
/// This is the simple "box" law: each local axis saturates on its own, so
/// the force direction does not maximize dissipation and the law is only
/// piecewise smooth (the smoothed sign keeps it usable for linearization,
/// but it still kinks sharply across the axis zero crossings).
pub fn box_friction<R: Real>(
    v_local: Vector2<R>,
    link_mass: R,
    gravity: R,
    mu_long: R,
    mu_trans: R,
) -> Vector2<R> {
    let normal = link_mass * gravity;
    Vector2::new(
        -normal * mu_trans * smooth_sgn(v_local.x),
        -normal * mu_long * smooth_sgn(v_local.y),
    )
}

/// Anisotropic Coulomb friction selecting, for the given slip velocity, the
/// force on the friction ellipse `(f_l/(mgμ_l))² + (f_t/(mgμ_t))² = 1` that
/// maximizes instantaneous dissipation `-f·v`:
///
/// ```text
/// f_l = -m·g·μ_l²·v_l / N,   f_t = -m·g·μ_t²·v_t / N,
/// N   = sqrt(μ_l²·v_l² + μ_t²·v_t² + ε_N²)
/// ```
///
/// The regularizer `ε_N` pulls the force smoothly to zero at rest; away from
/// the regularization scale the returned force lies on the ellipse boundary.
pub fn smooth_dry_friction<R: Real>(
    v_local: Vector2<R>,
    link_mass: R,
    gravity: R,
    mu_long: R,
    mu_trans: R,
) -> Vector2<R> {
    let normal = link_mass * gravity;
    let eps = normal * real(NORMALIZATION_EPS);
    let wl = mu_long * v_local.y;
    let wt = mu_trans * v_local.x;
    let n = (wl * wl + wt * wt + eps * eps).sqrt();
    Vector2::new(
        -normal * mu_trans * mu_trans * v_local.x / n,
        -normal * mu_long * mu_long * v_local.y / n,
    )
}

/// Linear anisotropic viscous friction `f = -diag(c_t, c_l)·v`.
pub fn viscous_friction<R: Real>(v_local: Vector2<R>, c_long: R, c_trans: R) -> Vector2<R> {
    Vector2::new(-c_trans * v_local.x, -c_long * v_local.y)
}

/// Quadratic drag on a link with cross section `a × b` and length `l`.
///
/// The bluff-body row (coefficient `c_drag`, frontal height `a`) acts on the
/// transverse axis; the skin-friction row (coefficient `c_skin`, wetted
/// perimeter factor `(a+b)/4`) acts on the longitudinal axis. At 1 m/s with
/// the reference coefficients these are ~15 N and ~0.16 N respectively.
pub fn drag_force<R: Real>(
    v_local: Vector2<R>,
    density: R,
    c_drag: R,
    c_skin: R,
    cross_height: R,
    cross_width: R,
    link_length: R,
) -> Vector2<R> {
    let half = real::<R>(0.5);
    let k_trans = half * density * c_drag * cross_height * link_length;
    let k_long = half
        * density
        * R::pi()
        * c_skin
        * ((cross_height + cross_width) / real(4.0))
        * link_length;
    Vector2::new(
        -k_trans * smooth_sgn(v_local.x) * v_local.x * v_local.x,
        -k_long * smooth_sgn(v_local.y) * v_local.y * v_local.y,
    )
}

/// Local mass matrix of a submerged link: the displaced fluid adds
/// `m_add = ρ·π·C_a·(a²/4)·l` to the transverse direction only, so the
/// result is `diag(m + m_add, m)` in `(transverse, longitudinal)` order.
pub fn added_mass_matrix<R: Real>(
    density: R,
    c_added: R,
    cross_height: R,
    link_length: R,
    link_mass: R,
) -> Matrix2<R> {
    let m_add = density * R::pi() * c_added * cross_height * cross_height / real(4.0) * link_length;
    Matrix2::new(link_mass + m_add, R::zero(), R::zero(), link_mass)
}

/// Selects one reaction-force law together with its coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentModel<R: Real> {
    /// Component-wise Coulomb friction ([`box_friction`]).
    BoxDry { mu_long: R, mu_trans: R },
    /// Maximum-dissipation anisotropic Coulomb friction
    /// ([`smooth_dry_friction`]).
    SmoothDry { mu_long: R, mu_trans: R },
    /// Linear viscous friction ([`viscous_friction`]), the low
    /// Reynolds-number swimming regime.
    Viscous { c_long: R, c_trans: R },
    /// Quadratic drag plus anisotropic added mass, the high Reynolds-number
    /// swimming regime. `in_plane_gravity` additionally applies the weight
    /// of the (added-mass weighted) link along world `-y`; it is off by
    /// default because the plane of motion is normally horizontal.
    Fluid {
        density: R,
        c_drag: R,
        c_skin: R,
        c_added: R,
        #[serde(default)]
        in_plane_gravity: bool,
    },
}

impl<R: Real> EnvironmentModel<R> {
    /// Reference dry-surface coefficients: μ_t = 0.9, μ_l = 0.1.
    pub fn preset_smooth_dry() -> Self {
        Self::SmoothDry {
            mu_long: real(0.1),
            mu_trans: real(0.9),
        }
    }

    /// Box-friction variant of the reference dry-surface coefficients.
    pub fn preset_box_dry() -> Self {
        Self::BoxDry {
            mu_long: real(0.1),
            mu_trans: real(0.9),
        }
    }

    /// Reference viscous coefficients: c_l = 10, c_t = 1 N·s/m.
    pub fn preset_viscous() -> Self {
        Self::Viscous {
            c_long: real(10.0),
            c_trans: real(1.0),
        }
    }

    /// Reference fluid coefficients: water density with unit drag and added
    /// mass coefficients and C_f = 0.01.
    pub fn preset_fluid() -> Self {
        Self::Fluid {
            density: real(1000.0),
            c_drag: real(1.0),
            c_skin: real(0.01),
            c_added: real(1.0),
            in_plane_gravity: false,
        }
    }

    /// Short label used in file outputs and logs.
    pub fn label(&self) -> &'static str {
        match self {
            Self::BoxDry { .. } => "box_dry",
            Self::SmoothDry { .. } => "smooth_dry",
            Self::Viscous { .. } => "viscous",
            Self::Fluid { .. } => "fluid",
        }
    }

    /// Reaction force at the center of mass, local `(transverse,
    /// longitudinal)` components.
    pub fn reaction_force(&self, v_local: Vector2<R>, params: &SnakeParams<R>) -> Vector2<R> {
        match *self {
            Self::BoxDry { mu_long, mu_trans } => box_friction(
                v_local,
                params.link_mass,
                params.gravity,
                mu_long,
                mu_trans,
            ),
            Self::SmoothDry { mu_long, mu_trans } => smooth_dry_friction(
                v_local,
                params.link_mass,
                params.gravity,
                mu_long,
                mu_trans,
            ),
            Self::Viscous { c_long, c_trans } => viscous_friction(v_local, c_long, c_trans),
            Self::Fluid {
                density,
                c_drag,
                c_skin,
                ..
            } => drag_force(
                v_local,
                density,
                c_drag,
                c_skin,
                params.cross_height,
                params.cross_width,
                params.link_length,
            ),
        }
    }

    /// Local mass matrix entering the per-link force balance; identity times
    /// the link mass except for the fluid model's added mass.
    pub fn mass_matrix_local(&self, params: &SnakeParams<R>) -> Matrix2<R> {
        match *self {
            Self::Fluid {
                density, c_added, ..
            } => added_mass_matrix(
                density,
                c_added,
                params.cross_height,
                params.link_length,
                params.link_mass,
            ),
            _ => Matrix2::from_diagonal_element(params.link_mass),
        }
    }

    /// Whether the weight term acts inside the plane of motion.
    pub fn in_plane_gravity(&self) -> bool {
        matches!(
            self,
            Self::Fluid {
                in_plane_gravity: true,
                ..
            }
        )
    }

    /// Copy with the transverse viscous coefficient scaled by `factor`; used
    /// by the model-error robustness experiment. Errors for other variants.
    pub fn with_scaled_c_trans(&self, factor: R) -> SimResult<Self> {
        match *self {
            Self::Viscous { c_long, c_trans } => Ok(Self::Viscous {
                c_long,
                c_trans: c_trans * factor,
            }),
            _ => Err(SimError::InvalidParams(
                "c_trans scaling only applies to the viscous model".into(),
            )),
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        let non_negative = |name: &str, v: R| -> Result<(), String> {
            if v >= R::zero() && v.finite() {
                Ok(())
            } else {
                Err(format!("{name} must be non-negative"))
            }
        };
        let result = match *self {
            Self::BoxDry { mu_long, mu_trans } | Self::SmoothDry { mu_long, mu_trans } => {
                non_negative("mu_long", mu_long).and(non_negative("mu_trans", mu_trans))
            }
            Self::Viscous { c_long, c_trans } => {
                non_negative("c_long", c_long).and(non_negative("c_trans", c_trans))
            }
            Self::Fluid {
                density,
                c_drag,
                c_skin,
                c_added,
                ..
            } => {
                if !(density > R::zero()) || !density.finite() {
                    Err("density must be strictly positive".to_string())
                } else {
                    non_negative("c_drag", c_drag)
                        .and(non_negative("c_skin", c_skin))
                        .and(non_negative("c_added", c_added))
                }
            }
        };
        result.map_err(SimError::InvalidParams)
    }
}
