//! Truncated operator basis for the exact master equation.
//!
//! Starting from every atom excited, the master equation only ever populates
//! operator-space pairs |m⟩⟨n| whose two product states share the same
//! per-level occupation counts: decay moves both sides of the density matrix
//! down together, and the drift terms shuffle which atom holds which level
//! without changing the counts. Restricting to those pairs shrinks the state
//! space from (L+1)^(2N) to Σ_classes (class size)², e.g. 184 756 instead of
//! ~10¹² for ten two-level atoms.
//!
//! States are product words over levels 0..=L with 0 the shared excited
//! level and 1..=L the lower level fed by channel (level−1). A "class"
//! collects all words with equal occupation counts; the coefficient vector
//! concatenates one dense (size × size) block per class, row index = left
//! state, column index = right state.

use crate::{Error, Result};

/// Default cap on retained operator pairs; one state vector at this size is
/// 128 MB and the integrator holds about a dozen of them.
pub const DEFAULT_MAX_PAIRS: usize = 8_000_000;

const MAX_ENUMERATED_STATES: u128 = 20_000_000;

/// One coherent drift hop within a class: lower atom `j` (excited → level),
/// re-excite atom `i` (level → excited), landing at `target_pos` within the
/// same class.
#[derive(Clone, Copy, Debug)]
pub struct DriftHop {
    pub target_pos: u32,
    pub i: u8,
    pub j: u8,
}

/// One dissipative hop: lower atom `j`, landing at `target_pos` within the
/// class one step down.
#[derive(Clone, Copy, Debug)]
pub struct JumpHop {
    pub target_pos: u32,
    pub j: u8,
}

#[derive(Debug)]
pub struct LiouvilleBasis {
    n_atoms: usize,
    n_channels: usize,
    /// Level word per state, `states[s][atom]`.
    states: Vec<Vec<u8>>,
    class_of_state: Vec<u32>,
    pos_in_class: Vec<u32>,
    class_members: Vec<Vec<u32>>,
    /// Start of each class block in the coefficient vector.
    class_offset: Vec<usize>,
    /// Occupation counts per class, `class_occupation[c][level]`.
    class_occupation: Vec<Vec<u8>>,
    /// Class reached from class `c` by one emission on channel `ch`.
    jump_class: Vec<Vec<Option<u32>>>,
    /// Atoms per level per state: `atoms_at[s][level]`.
    atoms_at: Vec<Vec<Vec<u8>>>,
    /// Drift hops per channel per state, indexed [ch][state].
    drift: Vec<Vec<Vec<DriftHop>>>,
    /// Jump hops per channel per state, indexed [ch][state].
    jumps: Vec<Vec<Vec<JumpHop>>>,
    n_pairs: usize,
}

/// Number of retained operator pairs for `n_atoms` atoms with `n_channels`
/// decay channels, without building anything. None on overflow.
pub fn truncated_pair_count(n_atoms: usize, n_channels: usize) -> Option<u128> {
    let levels = n_channels + 1;
    let mut total: u128 = 0;
    let mut counts = vec![0usize; levels];
    // Walk all compositions of n_atoms into `levels` parts.
    fn rec(
        counts: &mut Vec<usize>,
        slot: usize,
        remaining: usize,
        n_atoms: usize,
        total: &mut u128,
    ) -> Option<()> {
        if slot == counts.len() - 1 {
            counts[slot] = remaining;
            let m = multinomial(n_atoms, counts)?;
            *total = total.checked_add(m.checked_mul(m)?)?;
            return Some(());
        }
        for k in 0..=remaining {
            counts[slot] = k;
            rec(counts, slot + 1, remaining - k, n_atoms, total)?;
        }
        Some(())
    }
    rec(&mut counts, 0, n_atoms, n_atoms, &mut total)?;
    Some(total)
}

fn multinomial(n: usize, counts: &[usize]) -> Option<u128> {
    let mut result: u128 = 1;
    let mut remaining = n;
    for &k in counts {
        result = result.checked_mul(binomial(remaining, k)?)?;
        remaining -= k;
    }
    Some(result)
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    for i in 0..k {
        num = num.checked_mul((n - i) as u128)?;
        num /= (i + 1) as u128; // exact: product of j consecutive integers divides by j!
    }
    Some(num)
}

impl LiouvilleBasis {
    pub fn build(n_atoms: usize, n_channels: usize) -> Result<Self> {
        Self::build_with_cap(n_atoms, n_channels, DEFAULT_MAX_PAIRS)
    }

    pub fn build_with_cap(n_atoms: usize, n_channels: usize, max_pairs: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidArgument("atom count must be positive".into()));
        }
        if n_channels == 0 || n_channels > 120 {
            return Err(Error::InvalidArgument(format!(
                "channel count {n_channels} out of range [1, 120]"
            )));
        }
        let levels = n_channels + 1;
        let n_states = (levels as u128).checked_pow(n_atoms as u32).filter(|&s| {
            s <= MAX_ENUMERATED_STATES
        });
        let pairs = truncated_pair_count(n_atoms, n_channels);
        match (n_states, pairs) {
            (Some(_), Some(p)) if p <= max_pairs as u128 => {}
            (_, p) => {
                let memory = p
                    .map(|p| format!("{:.1} GB per state vector", p as f64 * 16e-9))
                    .unwrap_or_else(|| "overflowing".into());
                return Err(Error::Capacity(format!(
                    "{n_atoms} atoms with {n_channels} channels need {} retained pairs \
                     ({memory}), over the cap of {max_pairs}; use the correlation solver at \
                     this size",
                    p.map(|p| p.to_string()).unwrap_or_else(|| ">u128".into()),
                )));
            }
        }

        let n_states = (levels as usize).pow(n_atoms as u32);
        let mut states = Vec::with_capacity(n_states);
        let mut class_of_state = vec![0u32; n_states];
        let mut pos_in_class = vec![0u32; n_states];
        let mut class_members: Vec<Vec<u32>> = Vec::new();
        let mut class_occupation: Vec<Vec<u8>> = Vec::new();
        let mut class_index = std::collections::HashMap::<Vec<u8>, u32>::new();
        for s in 0..n_states {
            // Little-endian digits: atom 0 varies fastest.
            let mut word = vec![0u8; n_atoms];
            let mut rest = s;
            for w in word.iter_mut() {
                *w = (rest % levels) as u8;
                rest /= levels;
            }
            let mut occ = vec![0u8; levels];
            for &l in &word {
                occ[l as usize] += 1;
            }
            let c = *class_index.entry(occ.clone()).or_insert_with(|| {
                class_members.push(Vec::new());
                class_occupation.push(occ.clone());
                (class_members.len() - 1) as u32
            });
            class_of_state[s] = c;
            pos_in_class[s] = class_members[c as usize].len() as u32;
            class_members[c as usize].push(s as u32);
            states.push(word);
        }

        let n_classes = class_members.len();
        let mut class_offset = vec![0usize; n_classes];
        let mut n_pairs = 0usize;
        for c in 0..n_classes {
            class_offset[c] = n_pairs;
            n_pairs += class_members[c].len() * class_members[c].len();
        }

        let mut jump_class = vec![vec![None; n_channels]; n_classes];
        for c in 0..n_classes {
            for ch in 0..n_channels {
                if class_occupation[c][0] > 0 {
                    let mut occ = class_occupation[c].clone();
                    occ[0] -= 1;
                    occ[ch + 1] += 1;
                    jump_class[c][ch] = class_index.get(&occ).copied();
                }
            }
        }

        // Per-state atom lists and hop tables.
        let mut atoms_at = Vec::with_capacity(n_states);
        for word in &states {
            let mut lists = vec![Vec::new(); levels];
            for (atom, &l) in word.iter().enumerate() {
                lists[l as usize].push(atom as u8);
            }
            atoms_at.push(lists);
        }
        let state_id = |word: &[u8]| -> usize {
            let mut s = 0usize;
            for &l in word.iter().rev() {
                s = s * levels + l as usize;
            }
            s
        };
        let mut drift = vec![vec![Vec::new(); n_states]; n_channels];
        let mut jumps = vec![vec![Vec::new(); n_states]; n_channels];
        let mut scratch = vec![0u8; n_atoms];
        for s in 0..n_states {
            for ch in 0..n_channels {
                let level = (ch + 1) as u8;
                for &j in &atoms_at[s][0] {
                    scratch.copy_from_slice(&states[s]);
                    scratch[j as usize] = level;
                    let lowered = state_id(&scratch);
                    jumps[ch][s].push(JumpHop { target_pos: pos_in_class[lowered], j });
                    for &i in &atoms_at[s][level as usize] {
                        scratch[i as usize] = 0;
                        let target = state_id(&scratch);
                        scratch[i as usize] = level;
                        drift[ch][s].push(DriftHop {
                            target_pos: pos_in_class[target],
                            i,
                            j,
                        });
                    }
                }
            }
        }

        Ok(LiouvilleBasis {
            n_atoms,
            n_channels,
            states,
            class_of_state,
            pos_in_class,
            class_members,
            class_offset,
            class_occupation,
            jump_class,
            atoms_at,
            drift,
            jumps,
            n_pairs,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_members.len()
    }

    pub fn pair_count(&self) -> usize {
        self.n_pairs
    }

    pub fn state_word(&self, s: usize) -> &[u8] {
        &self.states[s]
    }

    pub fn class_of(&self, s: usize) -> u32 {
        self.class_of_state[s]
    }

    pub fn position_of(&self, s: usize) -> u32 {
        self.pos_in_class[s]
    }

    pub fn class_size(&self, c: u32) -> usize {
        self.class_members[c as usize].len()
    }

    pub fn class_states(&self, c: u32) -> &[u32] {
        &self.class_members[c as usize]
    }

    pub fn class_block_offset(&self, c: u32) -> usize {
        self.class_offset[c as usize]
    }

    pub fn class_counts(&self, c: u32) -> &[u8] {
        &self.class_occupation[c as usize]
    }

    pub fn jump_target_class(&self, c: u32, ch: usize) -> Option<u32> {
        self.jump_class[c as usize][ch]
    }

    pub fn excited_atoms(&self, s: usize) -> &[u8] {
        &self.atoms_at[s][0]
    }

    pub fn atoms_in_channel_level(&self, s: usize, ch: usize) -> &[u8] {
        &self.atoms_at[s][ch + 1]
    }

    pub fn drift_hops(&self, ch: usize, s: usize) -> &[DriftHop] {
        &self.drift[ch][s]
    }

    pub fn jump_hops(&self, ch: usize, s: usize) -> &[JumpHop] {
        &self.jumps[ch][s]
    }

    /// State id of the fully inverted word (every atom excited).
    pub fn inverted_state(&self) -> usize {
        0
    }

    /// Coefficient index of |inverted⟩⟨inverted|.
    pub fn inverted_pair_index(&self) -> usize {
        let s = self.inverted_state();
        let c = self.class_of_state[s] as usize;
        let size = self.class_members[c].len();
        let p = self.pos_in_class[s] as usize;
        self.class_offset[c] + p * size + p
    }
}
