//! Walsh–Hadamard codes and orthogonal-code-product (OCP) code sets.
//!
//! Codes use the natural (Sylvester) row ordering, in which row `i`, chip `j`
//! is `(-1)^popcount(i & j)`. Under this ordering the chip-wise product of
//! rows `a` and `b` is row `a ^ b`, so choosing codes whose pairwise products
//! are all distinct reduces to building a Sidon set in GF(2)^m.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CometError, Result};

pub const MAX_CODE_LENGTH: usize = 65536;

/// A ±1 chip sequence taken from a row of the natural-order Hadamard matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCode {
    chips: Vec<i8>,
    walsh_index: usize,
}

impl BinaryCode {
    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn walsh_index(&self) -> usize {
        self.walsh_index
    }

    /// Chip `j` as `+1.0` / `-1.0`.
    #[inline]
    pub fn chip(&self, j: usize) -> f64 {
        f64::from(self.chips[j])
    }

    /// Integer dot product with another code of the same length.
    pub fn dot(&self, other: &BinaryCode) -> i64 {
        self.chips
            .iter()
            .zip(&other.chips)
            .map(|(&a, &b)| i64::from(a) * i64::from(b))
            .sum()
    }
}

fn check_length(length: usize) -> Result<()> {
    if !(2..=MAX_CODE_LENGTH).contains(&length) || !length.is_power_of_two() {
        return Err(invalid(format!(
            "code length {length} must be a power of two in [2, {MAX_CODE_LENGTH}]"
        )));
    }
    Ok(())
}

/// Row `index` of the natural-order Hadamard matrix of size `length`.
pub fn walsh_row(length: usize, index: usize) -> Result<BinaryCode> {
    check_length(length)?;
    if index >= length {
        return Err(invalid(format!("walsh index {index} out of range for length {length}")));
    }
    let chips = (0..length)
        .map(|j| if (index & j).count_ones().is_multiple_of(2) { 1 } else { -1 })
        .collect();
    Ok(BinaryCode { chips, walsh_index: index })
}

/// All `length` rows of the Hadamard matrix, built by Sylvester doubling.
pub fn generate_walsh(length: usize) -> Result<Vec<BinaryCode>> {
    check_length(length)?;
    let mut rows: Vec<Vec<i8>> = vec![vec![1]];
    while rows.len() < length {
        let n = rows.len();
        let mut next = Vec::with_capacity(2 * n);
        for r in &rows {
            next.push(r.iter().chain(r.iter()).copied().collect());
        }
        for r in &rows {
            next.push(r.iter().copied().chain(r.iter().map(|&c| -c)).collect());
        }
        rows = next;
    }
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(walsh_index, chips)| BinaryCode { chips, walsh_index })
        .collect())
}

/// Chip-wise product of two codes.
pub fn code_product(a: &BinaryCode, b: &BinaryCode) -> Result<BinaryCode> {
    if a.len() != b.len() {
        return Err(invalid(format!("code length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(BinaryCode {
        chips: a.chips.iter().zip(&b.chips).map(|(&x, &y)| x * y).collect(),
        walsh_index: a.walsh_index ^ b.walsh_index,
    })
}

/// Correlate detector readings against a code: `(1/L) Σ readings[j] · chips[j]`.
pub fn demodulate(readings: &[f64], product: &BinaryCode) -> Result<f64> {
    if readings.len() != product.len() {
        return Err(invalid(format!(
            "readings length {} does not match code length {}",
            readings.len(),
            product.len()
        )));
    }
    let sum: f64 = readings
        .iter()
        .zip(&product.chips)
        .map(|(&r, &c)| if c > 0 { r } else { -r })
        .sum();
    Ok(sum / readings.len() as f64)
}

/// Number of unordered channel pairs for `channels` channels.
pub fn pair_count(channels: usize) -> usize {
    channels * channels.saturating_sub(1) / 2
}

/// Position of the pair `(k, l)`, `k < l`, in row-major upper-triangle order.
#[inline]
pub fn pair_position(channels: usize, k: usize, l: usize) -> usize {
    debug_assert!(k < l && l < channels);
    k * (2 * channels - k - 1) / 2 + (l - k - 1)
}

/// Codes assigned to modulation channels, with every pairwise product
/// mutually orthogonal, orthogonal to DC, and orthogonal to the codes.
///
/// Channel `2n` is the I-like axis of element `n`, channel `2n + 1` the
/// Q-like axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSet {
    length: usize,
    codes: Vec<BinaryCode>,
    products: Vec<BinaryCode>,
}

/// JSON form of a [`CodeSet`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSetDocument {
    pub length: usize,
    pub channel_indexes: Vec<usize>,
    /// `[k, l, walsh_index]` for every `k < l`.
    pub product_table: Vec<[usize; 3]>,
}

impl CodeSet {
    /// Build a code set from explicit Walsh indexes, validating the OCP
    /// conditions.
    pub fn from_indexes(length: usize, indexes: &[usize]) -> Result<Self> {
        check_length(length)?;
        if indexes.len() < 2 {
            return Err(invalid("a code set needs at least two channels"));
        }
        let codes = indexes
            .iter()
            .map(|&i| walsh_row(length, i))
            .collect::<Result<Vec<_>>>()?;
        if let Some(reason) = ocp_violation(indexes) {
            return Err(invalid(format!("indexes {indexes:?} violate OCP: {reason}")));
        }
        let k = codes.len();
        let mut products = Vec::with_capacity(pair_count(k));
        for a in 0..k {
            for b in a + 1..k {
                products.push(code_product(&codes[a], &codes[b])?);
            }
        }
        Ok(Self { length, codes, products })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn channels(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[BinaryCode] {
        &self.codes
    }

    pub fn code(&self, k: usize) -> &BinaryCode {
        &self.codes[k]
    }

    pub fn channel_indexes(&self) -> Vec<usize> {
        self.codes.iter().map(BinaryCode::walsh_index).collect()
    }

    /// Product code of channels `k` and `l` (order-insensitive, `k != l`).
    pub fn product(&self, k: usize, l: usize) -> &BinaryCode {
        let (a, b) = if k < l { (k, l) } else { (l, k) };
        &self.products[pair_position(self.channels(), a, b)]
    }

    pub fn products(&self) -> &[BinaryCode] {
        &self.products
    }

    pub fn product_index(&self, k: usize, l: usize) -> usize {
        self.product(k, l).walsh_index()
    }

    pub fn to_document(&self) -> CodeSetDocument {
        let k = self.channels();
        let mut product_table = Vec::with_capacity(pair_count(k));
        for a in 0..k {
            for b in a + 1..k {
                product_table.push([a, b, self.product_index(a, b)]);
            }
        }
        CodeSetDocument { length: self.length, channel_indexes: self.channel_indexes(), product_table }
    }

    /// Rebuild from a document; the product table must agree with the
    /// recomputed one.
    pub fn from_document(doc: &CodeSetDocument) -> Result<Self> {
        let set = Self::from_indexes(doc.length, &doc.channel_indexes)?;
        if set.to_document().product_table != doc.product_table {
            return Err(invalid("product table does not match channel indexes"));
        }
        Ok(set)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }
}

fn ocp_violation(indexes: &[usize]) -> Option<String> {
    let mut seen = BTreeSet::new();
    for &i in indexes {
        if i == 0 {
            return Some("index 0 (DC) selected".into());
        }
        if !seen.insert(i) {
            return Some(format!("index {i} repeated"));
        }
    }
    let codes = seen.clone();
    for (a, &x) in indexes.iter().enumerate() {
        for &y in &indexes[a + 1..] {
            let p = x ^ y;
            if codes.contains(&p) {
                return Some(format!("product {x}^{y}={p} collides with a code"));
            }
            if !seen.insert(p) {
                return Some(format!("product {x}^{y}={p} is not unique"));
            }
        }
    }
    None
}

/// Greedy ascending search for `channels` Walsh indexes with the OCP
/// property. Candidate `c` is accepted when it is not already an occupied
/// index (DC, a code, or a product) and every new product `c ^ a` is fresh.
pub fn select_ocp_set(length: usize, channels: usize) -> Result<CodeSet> {
    check_length(length)?;
    if channels < 2 {
        return Err(invalid(format!("need at least 2 channels, got {channels}")));
    }
    let mut accepted: Vec<usize> = Vec::with_capacity(channels);
    let mut occupied = vec![false; length];
    occupied[0] = true;
    for candidate in 1..length {
        if accepted.len() == channels {
            break;
        }
        if occupied[candidate] {
            continue;
        }
        let fresh = accepted.iter().all(|&a| !occupied[a ^ candidate]);
        if !fresh {
            continue;
        }
        occupied[candidate] = true;
        for &a in &accepted {
            occupied[a ^ candidate] = true;
        }
        accepted.push(candidate);
    }
    if accepted.len() < channels {
        return Err(CometError::NoValidCodeSet {
            placed: accepted.len(),
            requested: channels,
            length,
            needed: pair_count(channels) + channels,
            available: length - 1,
        });
    }
    CodeSet::from_indexes(length, &accepted)
}

/// Result of a brute-force orthogonality check over a code set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OcpVerification {
    pub products: usize,
    pub dot_products_checked: usize,
    pub violations: usize,
}

/// Check with integer dot products that every product code is orthogonal
/// to every other product, to DC, and to every channel code.
pub fn verify_ocp(set: &CodeSet) -> OcpVerification {
    let products = set.products();
    let mut checked = 0;
    let mut violations = 0;
    let mut tally = |d: i64| {
        checked += 1;
        if d != 0 {
            violations += 1;
        }
    };
    for (i, p) in products.iter().enumerate() {
        tally(p.chips.iter().map(|&c| i64::from(c)).sum());
        for c in set.codes() {
            tally(p.dot(c));
        }
        for q in &products[i + 1..] {
            tally(p.dot(q));
        }
    }
    OcpVerification { products: products.len(), dot_products_checked: checked, violations }
}
