use crate::boundary::VertexData;

use super::SimError;

/// One δ-lattice step at an instantaneous vertex, lasting δ².
#[derive(Clone, Debug, PartialEq)]
pub struct StepProbabilities {
    /// Move to distance δ along each incident edge, in the order of L(v).
    pub edges: Vec<f64>,
    pub stay: f64,
    pub kill: f64,
}

impl StepProbabilities {
    pub fn total(&self) -> f64 {
        self.edges.iter().sum::<f64>() + self.stay + self.kill
    }
}

/// Transition probabilities of the vertex lattice walk.
///
/// For `c > 0` the denominators are `c + δΣb`; for `c = 0` the walk never
/// stays and kills with probability `δa/(Σb + δa)`.
pub fn vertex_step_probabilities(d: &VertexData, delta: f64) -> Result<StepProbabilities, SimError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(SimError::BadDelta(delta));
    }
    let sb = d.b_sum();
    if sb <= 0.0 {
        return Err(SimError::NotInstantaneous(String::new()));
    }
    if d.c > 0.0 {
        let den = d.c + delta * sb;
        let stay = (d.c - delta * delta * d.a) / den;
        if stay < 0.0 {
            return Err(SimError::NegativeStay {
                vertex: String::new(),
                delta,
            });
        }
        Ok(StepProbabilities {
            edges: d.b.iter().map(|b| delta * b / den).collect(),
            stay,
            kill: delta * delta * d.a / den,
        })
    } else {
        let kill = delta * d.a / (sb + delta * d.a);
        Ok(StepProbabilities {
            edges: d.b.iter().map(|b| b * (1.0 - kill) / sb).collect(),
            stay: 0.0,
            kill,
        })
    }
}
