use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on (0, 1].
pub(crate) fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// First-passage time of a level at distance `a` for a Brownian bridge of
/// duration `dt` whose endpoint lies at distance `c` from the level (on
/// either side), conditioned on the level being reached.
///
/// With `y = τ/(dt − τ)`, `y` is inverse Gaussian with mean `a/c` and shape
/// `a²/dt`, degenerating to a Lévy law when `c = 0`.
pub(crate) fn bridge_passage_time<R: Rng + ?Sized>(rng: &mut R, a: f64, c: f64, dt: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let shape = a * a / dt;
    let y = if c > a * 1e-9 {
        InverseGaussian::new(a / c, shape)
            .expect("positive parameters")
            .sample(rng)
    } else {
        let z = normal(rng);
        shape / (z * z)
    };
    if y.is_finite() {
        dt * y / (1.0 + y)
    } else {
        dt
    }
}

/// Whether a path of duration `dt` starting at distance `a` from a level and
/// ending at signed distance `end` (positive on the starting side) reached
/// the level, and if so when.
pub(crate) fn crossing<R: Rng + ?Sized>(rng: &mut R, a: f64, end: f64, dt: f64, bridge: bool) -> Option<f64> {
    if !a.is_finite() {
        return None;
    }
    if end <= 0.0 {
        if bridge {
            Some(bridge_passage_time(rng, a, -end, dt))
        } else {
            Some(dt * a / (a - end))
        }
    } else if bridge {
        let p = (-2.0 * a * end / dt).exp();
        if rng.random::<f64>() < p {
            Some(bridge_passage_time(rng, a, end, dt))
        } else {
            None
        }
    } else {
        None
    }
}

/// Increment `g` of a Brownian motion over `dt` together with the maximum of
/// `-W` on `[0, dt]`.
pub(crate) fn increment_with_max<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> (f64, f64) {
    let g = dt.sqrt() * normal(rng);
    let u = open_uniform(rng);
    let m = 0.5 * (-g + (g * g - 2.0 * dt * u.ln()).sqrt());
    (g, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    /// One coarse step plus the bridge correction must reproduce the exact
    /// first-passage law `P(H ≤ t) = 2(1 − Φ(a/√t))`.
    #[test]
    fn coarse_step_reproduces_first_passage_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, dt, n) = (1.0f64, 2.0f64, 40_000);
        let mut times = Vec::new();
        for _ in 0..n {
            let g = dt.sqrt() * normal(&mut rng);
            if let Some(t) = crossing(&mut rng, a, a - g, dt, true) {
                times.push(t);
            }
        }
        let phi = Normal::new(0.0, 1.0).unwrap();
        let cdf = |t: f64| 2.0 * (1.0 - phi.cdf(a / t.sqrt()));
        let p_hit = times.len() as f64 / n as f64;
        let se = (cdf(dt) * (1.0 - cdf(dt)) / n as f64).sqrt();
        assert!((p_hit - cdf(dt)).abs() < 4.0 * se, "{p_hit} vs {}", cdf(dt));
        times.sort_by(f64::total_cmp);
        let m = times.len() as f64;
        let d = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = cdf(t) / cdf(dt);
                (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.6276 / m.sqrt(), "KS distance {d}");
    }

    #[test]
    fn reflected_maximum_dominates_increment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (g, m) = increment_with_max(&mut rng, 0.3);
            assert!(m >= 0.0 && m >= -g - 1e-12);
        }
    }

    #[test]
    fn certain_crossing_without_bridge_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(crossing(&mut rng, 1.0, -1.0, 2.0, false), Some(1.0));
        assert_eq!(crossing(&mut rng, 1.0, 0.5, 2.0, false), None);
    }
}
