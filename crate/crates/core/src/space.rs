//! Generalized Riemannian spaces: a non-symmetric basic tensor `g_ij`, an
//! optional almost complex structure `F^h_i`, and a connection that is either
//! derived from the metric, given explicitly, or obtained by deforming another
//! space's connection.

use alloc::boxed::Box;
use alloc::string::String;

use crate::geomap::Deformation;
use crate::linalg;
use crate::tensor::{Components, Slot, TensorField, Valence};
use crate::{Error, Result, MAX_DIM, SINGULAR_DET};

const METRIC: Valence = Valence::new(0, 2);
const STRUCTURE: Valence = Valence::new(1, 1);
const CONNECTION: Valence = Valence::new(1, 2);

/// Which way a deformation `P = ψ⊗δ + δ⊗ψ + ξ` is applied to the base
/// connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    /// `Γ = Γ_base + P` (this space is the image of the base).
    Forward,
    /// `Γ = Γ_base - P` (the base is the image of this space).
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappedConnection {
    pub base: Space,
    pub deformation: Deformation,
    pub direction: MapDirection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionSource {
    /// Generalized Christoffel symbols of the metric.
    Metric,
    /// `Γ^i_{jk}` given component-wise, used verbatim.
    Explicit(TensorField),
    Mapped(Box<MappedConnection>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    name: String,
    dim: usize,
    metric: Option<TensorField>,
    structure: Option<TensorField>,
    connection: ConnectionSource,
}

fn check_field(field: &TensorField, dim: usize, valence: Valence) -> Result<()> {
    if field.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: field.dim(),
        });
    }
    if field.valence() != valence {
        return Err(Error::Valence {
            expected: valence,
            found: field.valence(),
        });
    }
    Ok(())
}

impl Space {
    /// A space whose connection is derived from `metric`.
    pub fn from_metric(name: impl Into<String>, metric: TensorField) -> Result<Self> {
        let dim = metric.dim();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        check_field(&metric, dim, METRIC)?;
        Ok(Space {
            name: name.into(),
            dim,
            metric: Some(metric),
            structure: None,
            connection: ConnectionSource::Metric,
        })
    }

    /// A space with an explicit connection `Γ^i_{jk}` (valence `(1, 2)`).
    pub fn from_connection(name: impl Into<String>, connection: TensorField) -> Result<Self> {
        let dim = connection.dim();
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        check_field(&connection, dim, CONNECTION)?;
        Ok(Space {
            name: name.into(),
            dim,
            metric: None,
            structure: None,
            connection: ConnectionSource::Explicit(connection),
        })
    }

    /// A space whose connection is `base` deformed by `deformation`.
    pub fn mapped(
        name: impl Into<String>,
        base: Space,
        deformation: Deformation,
        direction: MapDirection,
    ) -> Result<Self> {
        let dim = base.dim;
        deformation.check_shape(dim)?;
        Ok(Space {
            name: name.into(),
            dim,
            metric: None,
            structure: None,
            connection: ConnectionSource::Mapped(Box::new(MappedConnection {
                base,
                deformation,
                direction,
            })),
        })
    }

    pub fn with_metric(mut self, metric: TensorField) -> Result<Self> {
        check_field(&metric, self.dim, METRIC)?;
        self.metric = Some(metric);
        Ok(self)
    }

    pub fn with_structure(mut self, structure: TensorField) -> Result<Self> {
        check_field(&structure, self.dim, STRUCTURE)?;
        self.structure = Some(structure);
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Option<&TensorField> {
        self.metric.as_ref()
    }

    pub fn structure(&self) -> Option<&TensorField> {
        self.structure.as_ref()
    }

    pub fn connection_source(&self) -> &ConnectionSource {
        &self.connection
    }

    pub fn metric_at(&self, p: &[f64]) -> Result<MetricAt> {
        let metric = self.metric.as_ref().ok_or(Error::MissingMetric)?;
        MetricAt::from_field(metric, p)
    }

    pub fn connection_at(&self, p: &[f64]) -> Result<ConnectionAt> {
        match &self.connection {
            ConnectionSource::Metric => Ok(self.metric_at(p)?.connection()),
            ConnectionSource::Explicit(field) => ConnectionAt::from_gamma(field.eval_at(p)?),
            ConnectionSource::Mapped(mapped) => {
                let base = mapped.base.connection_at(p)?;
                let deformation = mapped.deformation.tensor_at(p)?;
                let gamma = match mapped.direction {
                    MapDirection::Forward => base.gamma.add(&deformation)?,
                    MapDirection::Backward => base.gamma.sub(&deformation)?,
                };
                ConnectionAt::from_gamma(gamma)
            }
        }
    }
}

/// The metric and its first partials at a point, with the symmetric and
/// antisymmetric split and the inverse of the symmetric part.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAt {
    pub g: Components,
    /// `∂g_ij/∂x^k` stored at `[i][j][k]`.
    pub g_partials: Components,
    pub g_sym: Components,
    pub g_antisym: Components,
    /// `g^{ij}` with `g_sym[i][j] g^{jk} = δ_i^k`.
    pub g_sym_inverse: Components,
    pub det_sym: f64,
}

impl MetricAt {
    pub fn from_field(metric: &TensorField, p: &[f64]) -> Result<Self> {
        let jet = metric.jet_at(p)?;
        let n = metric.dim();
        let (g_sym, g_antisym) = jet
            .value
            .split_sym_antisym(Slot::Lower(0), Slot::Lower(1))?;
        let (inverse, det_sym) = linalg::invert(g_sym.data(), n, SINGULAR_DET)
            .map_err(|det| Error::SingularMetric { det })?;
        Ok(MetricAt {
            g: jet.value,
            g_partials: jet.partial,
            g_sym,
            g_antisym,
            g_sym_inverse: Components::from_vec(n, Valence::new(2, 0), inverse)?,
            det_sym,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// Generalized Christoffel symbols of the first kind,
    /// `Γ_{i.jk} = ½(g_{ji,k} - g_{jk,i} + g_{ik,j})`, at `[i][j][k]`.
    pub fn christoffel_first(&self) -> Components {
        let n = self.dim();
        let d = |a: usize, b: usize, c: usize| self.g_partials.get(&[a, b, c]);
        let mut out = Components::zeros(n, Valence::new(0, 3));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    // Summation order makes Γ_{i.jk} and Γ_{i.kj} bit-identical
                    // whenever the metric components are symmetric.
                    let v = 0.5 * ((d(j, i, k) + d(i, k, j)) - d(j, k, i));
                    out.set(&[i, j, k], v);
                }
            }
        }
        out
    }

    /// Raises the first index: `Γ^i_{jk} = g^{ip} Γ_{p.jk}`.
    pub fn connection(&self) -> ConnectionAt {
        let n = self.dim();
        let first = self.christoffel_first();
        let mut gamma = Components::zeros(n, Valence::new(1, 2));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = (0..n)
                        .map(|p| self.g_sym_inverse.get(&[i, p]) * first.get(&[p, j, k]))
                        .sum();
                    gamma.set(&[i, j, k], v);
                }
            }
        }
        let mut conn = ConnectionAt::split(gamma);
        conn.gamma_first = Some(first);
        conn
    }
}

/// Connection coefficients `Γ^i_{jk}` at a point (stored `[i][j][k]`) with
/// their symmetric part and torsion `Γ^i_{jk∨} = ½(Γ^i_{jk} - Γ^i_{kj})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionAt {
    /// Present only for metric-derived connections.
    pub gamma_first: Option<Components>,
    pub gamma: Components,
    pub gamma_sym: Components,
    pub torsion: Components,
}

impl ConnectionAt {
    pub fn from_gamma(gamma: Components) -> Result<Self> {
        if gamma.valence() != CONNECTION {
            return Err(Error::Valence {
                expected: CONNECTION,
                found: gamma.valence(),
            });
        }
        Ok(Self::split(gamma))
    }

    fn split(gamma: Components) -> Self {
        let (gamma_sym, torsion) = gamma
            .split_sym_antisym(Slot::Lower(0), Slot::Lower(1))
            .expect("connection has two lower slots");
        ConnectionAt {
            gamma_first: None,
            gamma,
            gamma_sym,
            torsion,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }
}
