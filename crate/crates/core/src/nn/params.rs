use std::collections::BTreeMap;

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Entry {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub m: Tensor,
    pub v: Tensor,
}

/// Named trainable tensors with gradient and Adam moment buffers, plus
/// named non-trainable buffers (batch-norm running statistics).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    pub(crate) entries: Vec<Entry>,
    index: BTreeMap<String, ParamId>,
    pub(crate) buffers: BTreeMap<String, Tensor>,
    pub(crate) adam_step: u64,
    grads_ready: bool,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(contract(format!("parameter `{name}` already exists")));
        }
        let id = ParamId(self.entries.len());
        let zeros = Tensor::zeros(value.shape());
        self.entries.push(Entry { name: name.to_owned(), grad: zeros.clone(), m: zeros.clone(), v: zeros, value });
        self.index.insert(name.to_owned(), id);
        Ok(id)
    }

    /// The parameter `name`, created uniform in `±1/√fan_in` when absent.
    pub fn get_or_init<R: Rng>(&mut self, name: &str, shape: &[usize], fan_in: usize, rng: &mut R) -> Result<ParamId> {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        self.get_or_with(name, shape, || {
            let n = shape.iter().product();
            Tensor::new(shape, (0..n).map(|_| rng.random_range(-bound..=bound)).collect()).unwrap()
        })
    }

    /// The parameter `name`, created by `make` when absent.
    pub fn get_or_with(&mut self, name: &str, shape: &[usize], make: impl FnOnce() -> Tensor) -> Result<ParamId> {
        if let Some(&id) = self.index.get(name) {
            let have = self.entries[id.0].value.shape();
            if have != shape {
                return Err(contract(format!("parameter `{name}` has shape {have:?}, expected {shape:?}")));
            }
            return Ok(id);
        }
        self.add(name, make())
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of trainable scalars.
    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].grad
    }

    pub fn moments(&self, id: ParamId) -> (&Tensor, &Tensor) {
        (&self.entries[id.0].m, &self.entries[id.0].v)
    }

    pub fn adam_step_count(&self) -> u64 {
        self.adam_step
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.data_mut().iter_mut().for_each(|g| *g = 0.0);
        }
        self.grads_ready = false;
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, g: &[f64]) {
        for (a, b) in self.entries[id.0].grad.data_mut().iter_mut().zip(g) {
            *a += b;
        }
    }

    pub(crate) fn mark_grads_ready(&mut self) {
        self.grads_ready = true;
    }

    pub(crate) fn take_grads_ready(&mut self) -> bool {
        std::mem::replace(&mut self.grads_ready, false)
    }

    /// Clears Adam moments and the step counter.
    pub fn reset_optimizer(&mut self) {
        for e in &mut self.entries {
            e.m.data_mut().iter_mut().for_each(|x| *x = 0.0);
            e.v.data_mut().iter_mut().for_each(|x| *x = 0.0);
        }
        self.adam_step = 0;
    }

    pub fn buffer(&self, name: &str) -> Option<&Tensor> {
        self.buffers.get(name)
    }

    pub fn set_buffer(&mut self, name: &str, value: Tensor) {
        self.buffers.insert(name.to_owned(), value);
    }

    pub fn buffers(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.buffers.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn apply_buffer_updates(&mut self, updates: Vec<(String, Tensor)>) {
        for (name, value) in updates {
            self.buffers.insert(name, value);
        }
    }

    fn check_compatible(&self, other: &ParamStore) -> Result<()> {
        let same = self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.name == b.name && a.value.shape() == b.value.shape())
            && self.buffers.len() == other.buffers.len()
            && self.buffers.iter().zip(&other.buffers).all(|(a, b)| a.0 == b.0 && a.1.shape() == b.1.shape());
        if same {
            Ok(())
        } else {
            Err(contract("parameter stores differ in names or shapes"))
        }
    }

    /// `self ← self + beta·(other − self)` over parameter values and
    /// buffers. Gradients and optimizer state are left alone.
    pub fn move_toward(&mut self, other: &ParamStore, beta: f64) -> Result<()> {
        self.check_compatible(other)?;
        let lerp = |dst: &mut Tensor, src: &Tensor| {
            for (a, b) in dst.data_mut().iter_mut().zip(src.data()) {
                *a = (1.0 - beta) * *a + beta * b;
            }
        };
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            lerp(&mut a.value, &b.value);
        }
        for (a, b) in self.buffers.values_mut().zip(other.buffers.values()) {
            lerp(a, b);
        }
        Ok(())
    }

    /// Copies parameter values and buffers (not optimizer state).
    pub fn copy_values_from(&mut self, other: &ParamStore) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.value = b.value.clone();
        }
        self.buffers = other.buffers.clone();
        Ok(())
    }

    /// Largest absolute difference of parameter values and buffers.
    pub fn max_abs_diff(&self, other: &ParamStore) -> Result<f64> {
        self.check_compatible(other)?;
        let tensors = |s: &ParamStore| -> Vec<Tensor> {
            s.entries.iter().map(|e| e.value.clone()).chain(s.buffers.values().cloned()).collect()
        };
        Ok(tensors(self)
            .iter()
            .zip(&tensors(other))
            .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_bounds_and_lookup() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = ParamStore::new();
        let id = s.get_or_init("w", &[4, 16], 16, &mut rng).unwrap();
        assert!(s.value(id).data().iter().all(|x| x.abs() <= 0.25));
        assert_eq!(s.get_or_init("w", &[4, 16], 16, &mut rng).unwrap(), id);
        assert!(s.get_or_init("w", &[4, 8], 8, &mut rng).is_err());
        assert_eq!(s.grad(id).shape(), s.value(id).shape());
        assert_eq!(s.moments(id).0.shape(), &[4, 16]);
    }

    #[test]
    fn move_toward_endpoints() {
        let mut a = ParamStore::new();
        a.add("w", Tensor::filled(&[2], 1.0)).unwrap();
        a.set_buffer("bn.mean", Tensor::filled(&[2], 0.0));
        let mut b = a.clone();
        b.value_mut(ParamId(0)).data_mut()[0] = 3.0;
        b.set_buffer("bn.mean", Tensor::filled(&[2], 2.0));
        let mut c = a.clone();
        c.move_toward(&b, 0.0).unwrap();
        assert_eq!(c, a);
        c.move_toward(&b, 1.0).unwrap();
        assert_eq!(c.max_abs_diff(&b).unwrap(), 0.0);
        let mut d = a.clone();
        d.move_toward(&b, 0.5).unwrap();
        assert_eq!(d.value(ParamId(0)).data(), &[2.0, 1.0]);
        assert_eq!(d.buffer("bn.mean").unwrap().data(), &[1.0, 1.0]);
    }
}
