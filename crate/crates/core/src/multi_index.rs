//! Increasing multi-indices stored as bitmasks, and the permutation sign.

/// Sign of the permutation sorting `seq`; `None` if an index repeats.
pub fn sort_sign(seq: &[usize]) -> Option<i32> {
    let mut inv = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] == seq[j] {
                return None;
            }
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    Some(if inv % 2 == 0 { 1 } else { -1 })
}

/// Sign of `dx^a ∧ dx^b = sign · dx^{a|b}`, zero if the masks overlap.
pub fn wedge_sign(a: u32, b: u32) -> i32 {
    if a & b != 0 {
        return 0;
    }
    // count pairs i in a, j in b with i > j
    let mut inv = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        bb &= bb - 1;
        inv += (a >> (j + 1)).count_ones();
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn mask_of(indices: &[usize]) -> u32 {
    indices.iter().fold(0u32, |m, i| m | (1 << i))
}

pub fn indices_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Basis of k-forms in `dim` variables, lexicographic in the increasing index tuples.
#[derive(Debug, Clone)]
pub struct Basis {
    pub dim: usize,
    pub degree: usize,
    pub masks: Vec<u32>,
    position: Vec<usize>,
}

impl Basis {
    pub fn new(dim: usize, degree: usize) -> Self {
        let mut masks = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<u32>) {
            if left == 0 {
                out.push(mask_of(cur));
                return;
            }
            for i in start..dim {
                cur.push(i);
                rec(i + 1, dim, left - 1, cur, out);
                cur.pop();
            }
        }
        if degree <= dim {
            rec(0, dim, degree, &mut cur, &mut masks);
        }
        let mut position = vec![usize::MAX; 1 << dim];
        for (p, m) in masks.iter().enumerate() {
            position[*m as usize] = p;
        }
        Self { dim, degree, masks, position }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn position(&self, mask: u32) -> Option<usize> {
        match self.position.get(mask as usize) {
            Some(&p) if p != usize::MAX => Some(p),
            _ => None,
        }
    }

    pub fn full_mask(&self) -> u32 {
        (1u32 << self.dim) - 1
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, i| a * i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lexicographic_order() {
        let b = Basis::new(4, 2);
        let tuples: Vec<Vec<usize>> = b.masks.iter().map(|m| indices_of(*m)).collect();
        assert_eq!(tuples, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(Basis::new(6, 3).len(), 20);
        assert_eq!(binomial(6, 3), 20);
    }

    #[test]
    fn known_signs() {
        // dx2 ∧ dx1 = -dx1∧dx2
        assert_eq!(wedge_sign(0b10, 0b01), -1);
        assert_eq!(wedge_sign(0b01, 0b10), 1);
        // dx3 ∧ dx1∧dx2 = +dx1∧dx2∧dx3
        assert_eq!(wedge_sign(0b100, 0b011), 1);
        assert_eq!(wedge_sign(0b011, 0b011), 0);
        assert_eq!(sort_sign(&[2, 0, 1]), Some(1));
        assert_eq!(sort_sign(&[1, 0, 2]), Some(-1));
        assert_eq!(sort_sign(&[1, 1]), None);
    }

    proptest! {
        #[test]
        fn wedge_sign_matches_sort_sign(a in 0u32..256, b in 0u32..256) {
            let mut seq = indices_of(a);
            seq.extend(indices_of(b));
            let expect = sort_sign(&seq).unwrap_or(0);
            prop_assert_eq!(wedge_sign(a, b), expect);
        }
    }
}
