//! Uniform access to named parameter buffers.
//!
//! Every parameter collection (cell weights, output layer, embedding, whole
//! model) exposes its buffers in one fixed order. Gradients use the same
//! types as parameters, so optimizers, clipping, gradient checks and the
//! checkpoint payload all walk the same list.

pub trait ParamSet {
    /// Named buffers in canonical order.
    fn buffers(&self) -> Vec<(&'static str, &[f64])>;

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;

    fn num_params(&self) -> usize {
        self.buffers().iter().map(|(_, b)| b.len()).sum()
    }

    fn fill(&mut self, value: f64) {
        for (_, b) in self.buffers_mut() {
            b.fill(value);
        }
    }

    /// Flattened copy of every buffer, in canonical order.
    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, b) in self.buffers() {
            out.extend_from_slice(b);
        }
        out
    }

    /// Overwrites every buffer from a flat slice produced by [`ParamSet::to_flat`].
    fn load_flat(&mut self, flat: &[f64]) -> bool {
        if flat.len() != self.num_params() {
            return false;
        }
        let mut offset = 0;
        for (_, b) in self.buffers_mut() {
            let n = b.len();
            b.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        true
    }

    /// `self += scale · other`, buffer by buffer. Both sides must share a layout.
    fn add_scaled(&mut self, other: &Self, scale: f64)
    where
        Self: Sized,
    {
        let src = other.buffers();
        for ((_, dst), (_, s)) in self.buffers_mut().into_iter().zip(src) {
            for (d, v) in dst.iter_mut().zip(s) {
                *d += scale * v;
            }
        }
    }

    fn sum_of_squares(&self) -> f64 {
        self.buffers()
            .iter()
            .flat_map(|(_, b)| b.iter())
            .map(|v| v * v)
            .sum()
    }
}

/// A zeroed copy with the same layout, used as a gradient accumulator.
pub fn zeros_like<P: ParamSet + Clone>(p: &P) -> P {
    let mut z = p.clone();
    z.fill(0.0);
    z
}
