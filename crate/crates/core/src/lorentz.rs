//! Four-vectors with metric (+,-,-,-), pure boosts and the `eta` factor.

use core::ops::{Add, Index, Mul, Neg, Sub};

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThreeVector(pub [f64; 3]);

impl ThreeVector {
    pub const ZERO: ThreeVector = ThreeVector([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        ThreeVector([x, y, z])
    }

    pub fn dot(&self, other: &ThreeVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn cross(&self, o: &ThreeVector) -> ThreeVector {
        let [a, b, c] = self.0;
        let [x, y, z] = o.0;
        ThreeVector([b * z - c * y, c * x - a * z, a * y - b * x])
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

impl Index<usize> for ThreeVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for ThreeVector {
    type Output = ThreeVector;
    fn add(self, o: ThreeVector) -> ThreeVector {
        ThreeVector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for ThreeVector {
    type Output = ThreeVector;
    fn sub(self, o: ThreeVector) -> ThreeVector {
        ThreeVector([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for ThreeVector {
    type Output = ThreeVector;
    fn neg(self) -> ThreeVector {
        ThreeVector(self.0.map(|x| -x))
    }
}

impl Mul<f64> for ThreeVector {
    type Output = ThreeVector;
    fn mul(self, s: f64) -> ThreeVector {
        ThreeVector(self.0.map(|x| x * s))
    }
}

/// Contravariant four-vector `(t, x, y, z)`; index 0 is the energy/time
/// component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector([t, x, y, z])
    }

    pub fn from_parts(t: f64, spatial: ThreeVector) -> Self {
        let [x, y, z] = spatial.0;
        FourVector([t, x, y, z])
    }

    /// On-shell four-momentum `(E_p, p)` for mass `m`.
    pub fn on_shell(p3: ThreeVector, m: f64) -> Self {
        Self::from_parts(on_shell_energy(p3, m), p3)
    }

    pub fn t(&self) -> f64 {
        self.0[0]
    }

    pub fn spatial(&self) -> ThreeVector {
        ThreeVector([self.0[1], self.0[2], self.0[3]])
    }

    pub fn dot(&self, other: &FourVector) -> f64 {
        minkowski_dot(self, other)
    }

    pub fn norm_sq(&self) -> f64 {
        minkowski_dot(self, self)
    }

    /// Largest absolute component, used as a scale for tolerances.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<usize> for FourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, o: FourVector) -> FourVector {
        FourVector(core::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector(core::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector(self.0.map(|x| -x))
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        FourVector(self.0.map(|x| x * s))
    }
}

/// `a0 b0 - a.b`
pub fn minkowski_dot(a: &FourVector, b: &FourVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// `sqrt(P.P)`; spacelike vectors are an error, not an imaginary mass.
pub fn invariant_mass(p: &FourVector) -> Result<f64> {
    let norm_sq = p.norm_sq();
    if norm_sq < 0.0 {
        return Err(Error::SpacelikeVector { norm_sq });
    }
    Ok(norm_sq.sqrt())
}

/// `eta = sqrt(P.P) / P0`. Equal to one exactly when the spatial part of
/// `P` vanishes.
pub fn eta(p: &FourVector) -> Result<f64> {
    if !(p.t() > 0.0) {
        return Err(Error::NonpositiveEnergy { energy: p.t() });
    }
    if p.spatial().is_zero() {
        return Ok(1.0);
    }
    Ok(invariant_mass(p)? / p.t())
}

/// `sqrt(|p|^2 + m^2)` with momentum and mass in energy units.
pub fn on_shell_energy(p3: ThreeVector, m: f64) -> f64 {
    (p3.norm_sq() + m * m).sqrt()
}

/// Pure Lorentz boost. Applied actively: a particle at rest comes out moving
/// with velocity `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boost {
    beta: ThreeVector,
    gamma: f64,
}

impl Boost {
    pub fn new(beta: ThreeVector) -> Result<Self> {
        let b2 = beta.norm_sq();
        if !(b2 < 1.0) {
            return Err(Error::SuperluminalBoost { speed: b2.sqrt() });
        }
        Ok(Boost { beta, gamma: 1.0 / (1.0 - b2).sqrt() })
    }

    pub fn identity() -> Self {
        Boost { beta: ThreeVector::ZERO, gamma: 1.0 }
    }

    /// Boost of speed `beta` along the unit axis `axis`.
    pub fn along(axis: ThreeVector, beta: f64) -> Result<Self> {
        let n = axis.norm();
        if n == 0.0 {
            return if beta == 0.0 { Ok(Self::identity()) } else { Err(Error::ZeroWavevector) };
        }
        Self::new(axis * (beta / n))
    }

    /// Boost into the frame where `total` has no spatial momentum.
    pub fn to_rest_frame_of(total: &FourVector) -> Result<Self> {
        if !(total.t() > 0.0) {
            return Err(Error::NonpositiveEnergy { energy: total.t() });
        }
        Self::new(total.spatial() * (-1.0 / total.t()))
    }

    pub fn beta(&self) -> ThreeVector {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Rapidity `atanh |beta|`.
    pub fn rapidity(&self) -> f64 {
        self.beta.norm().atanh()
    }

    pub fn inverse(&self) -> Self {
        Boost { beta: -self.beta, gamma: self.gamma }
    }

    pub fn is_identity(&self) -> bool {
        self.beta.is_zero()
    }

    pub fn apply(&self, p: &FourVector) -> FourVector {
        if self.is_identity() {
            return *p;
        }
        let b2 = self.beta.norm_sq();
        let bp = self.beta.dot(&p.spatial());
        let g = self.gamma;
        let t = g * (p.t() + bp);
        let spatial = p.spatial() + self.beta * ((g - 1.0) * bp / b2 + g * p.t());
        FourVector::from_parts(t, spatial)
    }

    /// Matrix `Lambda^mu_nu` of [`Boost::apply`].
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (nu, col) in [
            FourVector::new(1.0, 0.0, 0.0, 0.0),
            FourVector::new(0.0, 1.0, 0.0, 0.0),
            FourVector::new(0.0, 0.0, 1.0, 0.0),
            FourVector::new(0.0, 0.0, 0.0, 1.0),
        ]
        .iter()
        .enumerate()
        {
            let image = self.apply(col);
            for mu in 0..4 {
                m[mu][nu] = image[mu];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        let e0 = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(minkowski_dot(&e0, &e0), 1.0);
        let p = FourVector::new(5.0, 3.0, 0.0, 0.0);
        assert_eq!(p.norm_sq(), 16.0);
        let k = FourVector::new(2.0, 0.0, 0.0, 2.0);
        assert_eq!(k.norm_sq(), 0.0);
    }

    #[test]
    fn invariant_mass_examples() {
        assert_eq!(invariant_mass(&FourVector::new(5.0, 3.0, 0.0, 0.0)), Ok(4.0));
        assert_eq!(invariant_mass(&FourVector::new(0.511, 0.0, 0.0, 0.0)), Ok(0.511));
        assert_eq!(invariant_mass(&FourVector::new(1.0, 0.0, 0.0, 2.0)), Err(Error::SpacelikeVector { norm_sq: -3.0 }));
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(&FourVector::new(3.7, 0.0, 0.0, 0.0)), Ok(1.0));
        assert!((eta(&FourVector::new(5.0, 3.0, 0.0, 0.0)).unwrap() - 0.8).abs() < 1e-15);
        let boosted = Boost::new(ThreeVector::new(0.6, 0.0, 0.0)).unwrap().apply(&FourVector::new(2.0, 0.0, 0.0, 0.0));
        assert!((eta(&boosted).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(eta(&FourVector::new(0.0, 0.0, 0.0, 0.0)), Err(Error::NonpositiveEnergy { .. })));
        assert!(matches!(eta(&FourVector::new(1.0, 2.0, 0.0, 0.0)), Err(Error::SpacelikeVector { .. })));
    }

    #[test]
    fn boost_examples() {
        let p = FourVector::new(1.3, 0.2, -0.4, 0.9);
        assert_eq!(Boost::new(ThreeVector::ZERO).unwrap().apply(&p), p);
        let b = Boost::new(ThreeVector::new(0.6, 0.0, 0.0)).unwrap();
        assert!((b.gamma() - 1.25).abs() < 1e-15);
        let out = b.apply(&FourVector::new(1.0, 0.0, 0.0, 0.0));
        for (x, y) in out.0.iter().zip([1.25, 0.75, 0.0, 0.0]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(matches!(Boost::new(ThreeVector::new(0.0, 1.0, 0.0)), Err(Error::SuperluminalBoost { .. })));
    }

    #[test]
    fn eta_over_beta_grid() {
        for i in 0..10 {
            let beta = 0.1 * i as f64;
            let b = Boost::along(ThreeVector::new(0.0, 0.0, 1.0), beta).unwrap();
            let e = eta(&b.apply(&FourVector::new(2.5, 0.0, 0.0, 0.0))).unwrap();
            assert!((e - (1.0 - beta * beta).sqrt()).abs() < 1e-12, "beta {beta}");
        }
    }

    #[test]
    fn on_shell_examples() {
        assert_eq!(on_shell_energy(ThreeVector::ZERO, 0.7), 0.7);
        assert_eq!(on_shell_energy(ThreeVector::new(0.0, 3.0, 0.0), 4.0), 5.0);
        assert_eq!(on_shell_energy(ThreeVector::new(0.0, 0.0, -2.5), 0.0), 2.5);
    }

    #[test]
    fn rest_frame_boost_removes_momentum() {
        let total = FourVector::new(3.0, 0.4, -1.1, 0.7);
        let rest = Boost::to_rest_frame_of(&total).unwrap().apply(&total);
        assert!(rest.spatial().norm() < 1e-14);
        assert!((rest.t() - total.norm_sq().sqrt()).abs() < 1e-14);
    }

    fn four() -> impl Strategy<Value = FourVector> {
        prop::array::uniform4(-10.0f64..10.0).prop_map(FourVector)
    }

    fn beta() -> impl Strategy<Value = ThreeVector> {
        (prop::array::uniform3(-1.0f64..1.0), 0.0f64..0.99).prop_filter_map("nonzero axis", |(axis, speed)| {
            let axis = ThreeVector(axis);
            (axis.norm() > 1e-3).then(|| axis * (speed / axis.norm()))
        })
    }

    proptest! {
        #[test]
        fn boost_preserves_minkowski_dot(a in four(), b in four(), v in beta()) {
            let boost = Boost::new(v).unwrap();
            let lhs = minkowski_dot(&boost.apply(&a), &boost.apply(&b));
            let rhs = minkowski_dot(&a, &b);
            let scale = boost.gamma() * boost.gamma() * a.max_abs() * b.max_abs() * 4.0;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn boost_then_inverse_is_identity(a in four(), v in beta()) {
            let boost = Boost::new(v).unwrap();
            let back = boost.inverse().apply(&boost.apply(&a));
            let scale = boost.gamma() * boost.gamma() * a.max_abs();
            for i in 0..4 {
                prop_assert!((back[i] - a[i]).abs() <= 1e-12 * scale.max(1.0));
            }
        }
    }
}
