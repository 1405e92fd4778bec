//! Attribute-value object worlds and constructed language systems over them.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Records, Targets};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectWorld {
    pub attributes: usize,
    pub values: usize,
}

impl Default for ObjectWorld {
    fn default() -> Self {
        Self { attributes: 2, values: 8 }
    }
}

impl ObjectWorld {
    pub fn new(attributes: usize, values: usize) -> Result<Self> {
        let w = Self { attributes, values };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes == 0 || self.values == 0 {
            return Err(Error::param("attributes and values must be positive"));
        }
        let size = (self.values as u64).checked_pow(self.attributes as u32);
        if size.is_none_or(|s| s > 1 << 24) {
            return Err(Error::param("object world too large to enumerate"));
        }
        Ok(())
    }

    /// `|O| = values^attributes`.
    pub fn size(&self) -> usize {
        self.values.pow(self.attributes as u32)
    }

    /// Attribute values of object `index`, first attribute most significant.
    pub fn object(&self, index: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.attributes];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = (rest % self.values) as u32;
            rest /= self.values;
        }
        out
    }

    pub fn index(&self, attrs: &[u32]) -> usize {
        attrs.iter().fold(0, |acc, &a| acc * self.values + a as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LanguageKind {
    /// Token `m` names attribute `m` through a per-position permutation.
    Compositional,
    /// A random bijection from objects to sentences.
    Holistic,
    /// The compositional language with each object reassigned a uniformly
    /// random sentence with probability `p_swap`.
    Noisy { p_swap: f64 },
}

impl LanguageKind {
    pub fn name(&self) -> String {
        match self {
            LanguageKind::Compositional => "compositional".into(),
            LanguageKind::Holistic => "holistic".into(),
            LanguageKind::Noisy { p_swap } => format!("noisy({p_swap})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSystem {
    pub world: ObjectWorld,
    pub kind: LanguageKind,
    /// Sentence for each object in canonical order.
    pub sentences: Vec<Vec<u32>>,
}

impl LanguageSystem {
    pub fn new(world: ObjectWorld, kind: LanguageKind, seed: u64) -> Result<Self> {
        world.validate()?;
        let n = world.size();
        let compositional = || {
            let mut rng = rng::stream(seed, &[tag::LANGUAGE, 0]);
            let perms: Vec<Vec<u32>> = (0..world.attributes)
                .map(|_| {
                    let mut p: Vec<u32> = (0..world.values as u32).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            (0..n)
                .map(|o| world.object(o).iter().zip(&perms).map(|(&v, p)| p[v as usize]).collect())
                .collect::<Vec<Vec<u32>>>()
        };
        let sentences = match kind {
            LanguageKind::Compositional => compositional(),
            LanguageKind::Holistic => {
                let mut rng = rng::stream(seed, &[tag::LANGUAGE, 1]);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                perm.into_iter().map(|s| world.object(s)).collect()
            }
            LanguageKind::Noisy { p_swap } => {
                if !(0.0..=1.0).contains(&p_swap) {
                    return Err(Error::param(format!("p_swap {p_swap} outside [0, 1]")));
                }
                let mut sentences = compositional();
                let mut rng = rng::stream(seed, &[tag::LANGUAGE, 2]);
                for s in &mut sentences {
                    if rng.random::<f64>() < p_swap {
                        for t in s.iter_mut() {
                            *t = rng.random_range(0..world.values as u32);
                        }
                    }
                }
                sentences
            }
        };
        Ok(Self { world, kind, sentences })
    }

    pub fn vocab(&self) -> usize {
        self.world.values
    }
}

/// `repeats` copies of every `(sentence, object)` pair, shuffled. Targets are
/// the object's attribute values.
pub fn emit_dataset(language: &LanguageSystem, repeats: usize, seed: u64) -> Result<Records> {
    if repeats == 0 {
        return Err(Error::param("repeats must be positive"));
    }
    let world = language.world;
    let mut objects: Vec<usize> = (0..world.size()).flat_map(|o| std::iter::repeat_n(o, repeats)).collect();
    objects.shuffle(&mut rng::stream(seed, &[tag::EMIT]));
    let tokens = objects.iter().flat_map(|&o| language.sentences[o].iter().copied()).collect();
    let targets = objects.iter().flat_map(|&o| world.object(o)).collect();
    Records::new(
        world.attributes,
        tokens,
        Targets::Classes { slots: world.attributes, classes: world.values, data: targets },
    )
}

/// `K(Z) = |O| log₂|O|` for uniformly distributed objects.
pub fn k_z_uniform(world: &ObjectWorld) -> Result<f64> {
    let n = world.size();
    if n < 2 {
        return Err(Error::param("a world with fewer than two objects has no uniform code"));
    }
    Ok(n as f64 * (n as f64).log2())
}

/// Alternative `N log₂|O|` charging every emitted record. Not the default.
pub fn k_z_per_record(world: &ObjectWorld, records: usize) -> Result<f64> {
    k_z_uniform(world)?;
    Ok(records as f64 * (world.size() as f64).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_radix_objects() {
        let w = ObjectWorld::default();
        assert_eq!(w.size(), 64);
        assert_eq!(w.object(13), vec![1, 5]);
        for o in 0..64 {
            assert_eq!(w.index(&w.object(o)), o);
        }
    }

    #[test]
    fn default_dataset_size() {
        let lang = LanguageSystem::new(ObjectWorld::default(), LanguageKind::Compositional, 0).unwrap();
        assert_eq!(emit_dataset(&lang, 50, 0).unwrap().len(), 3200);
    }

    #[test]
    fn zero_swap_is_compositional() {
        let w = ObjectWorld::default();
        let a = LanguageSystem::new(w, LanguageKind::Compositional, 5).unwrap();
        let b = LanguageSystem::new(w, LanguageKind::Noisy { p_swap: 0.0 }, 5).unwrap();
        assert_eq!(a.sentences, b.sentences);
        assert_eq!(emit_dataset(&a, 3, 1).unwrap(), emit_dataset(&b, 3, 1).unwrap());
    }

    #[test]
    fn holistic_is_a_bijection() {
        let lang = LanguageSystem::new(ObjectWorld::default(), LanguageKind::Holistic, 2).unwrap();
        let set: std::collections::HashSet<_> = lang.sentences.iter().collect();
        assert_eq!(set.len(), 64);
    }

    #[test]
    fn compositional_tokens_depend_on_one_attribute() {
        let w = ObjectWorld::default();
        let lang = LanguageSystem::new(w, LanguageKind::Compositional, 3).unwrap();
        for o in 0..64 {
            for p in 0..64 {
                let (a, b) = (w.object(o), w.object(p));
                for m in 0..2 {
                    assert_eq!(a[m] == b[m], lang.sentences[o][m] == lang.sentences[p][m]);
                }
            }
        }
    }

    #[test]
    fn uniform_object_code() {
        assert_eq!(k_z_uniform(&ObjectWorld::default()).unwrap(), 384.0);
        assert_eq!(k_z_uniform(&ObjectWorld::new(1, 2).unwrap()).unwrap(), 2.0);
        assert!(k_z_uniform(&ObjectWorld::new(3, 1).unwrap()).is_err());
        assert_eq!(k_z_per_record(&ObjectWorld::default(), 3200).unwrap(), 3200.0 * 6.0);
    }
}
