//! Register-structured statevector.
//!
//! Registers are stacked in allocation order with the first register in the
//! most significant index bits; a freshly allocated register becomes the least
//! significant block. Within a register the packed [`BitString`] value is the
//! register's basis index, so register `X` holding `|s>` contributes
//! `s.value() << offset(X)` to the global index.

use num_complex::Complex64;
use serde::Serialize;

use crate::bits::{g_of_weight, BitString, GVariant};
use crate::error::{Result, RfsError};

pub const MAX_QUBITS: usize = 26;

/// Nonzero-amplitude cap for [`Statevector::debug_json`].
pub const DEBUG_DUMP_LIMIT: usize = 4096;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct RegId(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Zeros,
    UniformSuperposition,
    /// `(|0> - |1>)/sqrt 2`; one qubit only.
    Minus,
}

impl InitKind {
    /// Amplitudes of the register's initial state.
    fn amplitudes(self, qubits: usize) -> Vec<f64> {
        let dim = 1usize << qubits;
        match self {
            InitKind::Zeros => {
                let mut v = vec![0.0; dim];
                v[0] = 1.0;
                v
            }
            InitKind::UniformSuperposition => vec![(dim as f64).sqrt().recip(); dim],
            InitKind::Minus => vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Register {
    pub id: RegId,
    pub qubits: usize,
    pub init: InitKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    #[serde(skip)]
    next_id: u32,
}

impl RegisterLayout {
    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.qubits).sum()
    }

    fn position(&self, id: RegId) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| RfsError::contract(format!("register {id:?} not in layout")))
    }

    pub fn qubits(&self, id: RegId) -> Result<usize> {
        Ok(self.registers[self.position(id)?].qubits)
    }

    /// Index-bit offset of the register's least significant qubit.
    pub fn offset(&self, id: RegId) -> Result<usize> {
        let pos = self.position(id)?;
        Ok(self.registers[pos + 1..].iter().map(|r| r.qubits).sum())
    }

    /// `(offset, mask)` such that `(index >> offset) & mask` is the register value.
    pub fn field(&self, id: RegId) -> Result<(usize, usize)> {
        let q = self.qubits(id)?;
        Ok((self.offset(id)?, (1usize << q) - 1))
    }
}

#[derive(Clone, Debug)]
pub struct Statevector {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl Default for Statevector {
    fn default() -> Self {
        Self::new()
    }
}

impl Statevector {
    /// Zero-qubit state with amplitude 1.
    pub fn new() -> Self {
        Statevector {
            layout: RegisterLayout::default(),
            amps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Allocate a register and prepare it in `kind`, tensored onto the current state.
    pub fn init_register(&mut self, qubits: usize, kind: InitKind) -> Result<RegId> {
        if qubits == 0 {
            return Err(RfsError::contract("register must have at least one qubit"));
        }
        if kind == InitKind::Minus && qubits != 1 {
            return Err(RfsError::contract(format!(
                "minus state needs a 1-qubit register, got {qubits}"
            )));
        }
        let total = self.layout.total_qubits() + qubits;
        if total > MAX_QUBITS {
            return Err(RfsError::contract(format!(
                "{total} qubits exceeds the {MAX_QUBITS}-qubit budget"
            )));
        }
        let local = kind.amplitudes(qubits);
        let mut amps = Vec::with_capacity(self.amps.len() << qubits);
        for a in &self.amps {
            amps.extend(local.iter().map(|&c| a * c));
        }
        self.amps = amps;
        let id = RegId(self.layout.next_id);
        self.layout.next_id += 1;
        self.layout.registers.push(Register {
            id,
            qubits,
            init: kind,
        });
        Ok(id)
    }

    /// Apply `H` to every qubit of the register.
    pub fn hadamard_all(&mut self, reg: RegId) -> Result<()> {
        let (offset, _) = self.layout.field(reg)?;
        let qubits = self.layout.qubits(reg)?;
        for q in offset..offset + qubits {
            let stride = 1usize << q;
            for block in (0..self.amps.len()).step_by(stride << 1) {
                for i in block..block + stride {
                    let a = self.amps[i];
                    let b = self.amps[i + stride];
                    self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                    self.amps[i + stride] = (a - b) * FRAC_1_SQRT_2;
                }
            }
        }
        Ok(())
    }

    /// Reversible XOR gate: flips `target` on every basis state where `f`
    /// (given the values of `controls`, in order) returns true.
    pub fn xor_function<F>(&mut self, controls: &[RegId], target: RegId, f: F) -> Result<()>
    where
        F: Fn(&[u32]) -> bool,
    {
        let (toff, _) = self.layout.field(target)?;
        if self.layout.qubits(target)? != 1 {
            return Err(RfsError::contract("XOR target must be a single qubit"));
        }
        if controls.contains(&target) {
            return Err(RfsError::contract("XOR target overlaps a control register"));
        }
        let fields = controls
            .iter()
            .map(|&c| self.layout.field(c))
            .collect::<Result<Vec<_>>>()?;
        let tbit = 1usize << toff;
        let mut values = vec![0u32; controls.len()];
        for i in 0..self.amps.len() {
            if i & tbit != 0 {
                continue;
            }
            for (v, &(off, mask)) in values.iter_mut().zip(&fields) {
                *v = ((i >> off) & mask) as u32;
            }
            if f(&values) {
                self.amps.swap(i, i | tbit);
            }
        }
        Ok(())
    }

    /// `G|s>|y> = |s>|y xor g(s)>`.
    pub fn g_gate(&mut self, src: RegId, target: RegId, variant: GVariant) -> Result<()> {
        self.xor_function(&[src], target, |v| g_of_weight(v[0].count_ones(), variant))
    }

    /// Probability mass per value of `reg`.
    pub fn register_distribution(&self, reg: RegId) -> Result<Vec<f64>> {
        let (off, mask) = self.layout.field(reg)?;
        let mut mass = vec![0.0; mask + 1];
        for (i, a) in self.amps.iter().enumerate() {
            mass[(i >> off) & mask] += a.norm_sqr();
        }
        Ok(mass)
    }

    /// Read a register that should hold a single basis value. Returns the
    /// value and its probability mass; fails if the mass is below `1 - tol`.
    pub fn measure_deterministic(&self, reg: RegId, tol: f64) -> Result<(u32, f64)> {
        let mass = self.register_distribution(reg)?;
        let (value, &p) = mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("register has at least one value");
        if p < 1.0 - tol {
            return Err(RfsError::integrity(format!(
                "register {reg:?} is not in a basis state: best value {value} has mass {p}"
            )));
        }
        Ok((value as u32, p))
    }

    /// Project out `reg` against its initial state: returns the remaining
    /// amplitudes `<phi_init|_reg psi>` in the reduced index space.
    fn contract_out(
        &self,
        amps: &[Complex64],
        layout: &RegisterLayout,
        reg: RegId,
    ) -> Result<Vec<Complex64>> {
        let pos = layout.position(reg)?;
        let r = &layout.registers[pos];
        let (off, mask) = layout.field(reg)?;
        let phi = r.init.amplitudes(r.qubits);
        let low = (1usize << off) - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len() >> r.qubits];
        for (i, a) in amps.iter().enumerate() {
            let v = (i >> off) & mask;
            if phi[v] == 0.0 {
                continue;
            }
            let j = ((i >> (off + r.qubits)) << off) | (i & low);
            out[j] += a * phi[v];
        }
        Ok(out)
    }

    /// `||psi - psi_rest (x) phi_init||` for one register.
    fn residual(
        &self,
        amps: &[Complex64],
        layout: &RegisterLayout,
        reg: RegId,
        rest: &[Complex64],
    ) -> Result<f64> {
        let pos = layout.position(reg)?;
        let r = &layout.registers[pos];
        let (off, mask) = layout.field(reg)?;
        let phi = r.init.amplitudes(r.qubits);
        let low = (1usize << off) - 1;
        let mut err = 0.0;
        for (i, a) in amps.iter().enumerate() {
            let v = (i >> off) & mask;
            let j = ((i >> (off + r.qubits)) << off) | (i & low);
            err += (a - rest[j] * phi[v]).norm_sqr();
        }
        Ok(err.sqrt())
    }

    /// Remove `regs` one at a time, returning the reduced state and the largest
    /// residual seen.
    fn split_off(&self, regs: &[RegId]) -> Result<(RegisterLayout, Vec<Complex64>, f64)> {
        let mut layout = self.layout.clone();
        let mut amps = self.amps.clone();
        let mut worst = 0.0f64;
        for &reg in regs {
            let rest = self.contract_out(&amps, &layout, reg)?;
            worst = worst.max(self.residual(&amps, &layout, reg, &rest)?);
            let pos = layout.position(reg)?;
            layout.registers.remove(pos);
            amps = rest;
        }
        Ok((layout, amps, worst))
    }

    /// True iff every listed register is unentangled from the rest and back
    /// in its initial state, within `1e-9`.
    pub fn verify_discard(&self, regs: &[RegId]) -> bool {
        matches!(self.split_off(regs), Ok((_, _, worst)) if worst <= 1e-9)
    }

    /// Drop registers that pass [`Statevector::verify_discard`].
    pub fn discard(&mut self, regs: &[RegId]) -> Result<()> {
        let (mut layout, amps, worst) = self.split_off(regs)?;
        if worst > 1e-9 {
            return Err(RfsError::integrity(format!(
                "cannot discard {regs:?}: residual {worst:e} from initial product state"
            )));
        }
        layout.next_id = self.layout.next_id;
        self.layout = layout;
        self.amps = amps;
        Ok(())
    }

    /// Every amplitude is real and either 0 or `+-2^(-m/2)` for an integer `m`.
    pub fn is_dyadic_real(&self, tol: f64) -> bool {
        self.amps.iter().all(|a| {
            if a.im.abs() > tol {
                return false;
            }
            let r = a.re.abs();
            if r <= tol {
                return true;
            }
            let m = -2.0 * r.log2();
            (r - (-m.round() / 2.0).exp2()).abs() <= tol
        })
    }

    /// Build a state with an explicit layout; for reference states in tests.
    pub fn from_registers(
        registers: &[(usize, InitKind)],
        amps: Vec<Complex64>,
    ) -> Result<(Self, Vec<RegId>)> {
        let mut state = Statevector::new();
        let mut ids = Vec::new();
        for &(q, kind) in registers {
            ids.push(state.init_register(q, kind)?);
        }
        if amps.len() != state.amps.len() {
            return Err(RfsError::contract(format!(
                "expected {} amplitudes, got {}",
                state.amps.len(),
                amps.len()
            )));
        }
        state.amps = amps;
        Ok((state, ids))
    }

    /// Computational basis state with one `(qubits, value)` pair per register.
    /// Registers are tagged as zero-initialized.
    pub fn basis_state(registers: &[(usize, u32)]) -> Result<(Self, Vec<RegId>)> {
        let mut state = Statevector::new();
        let mut ids = Vec::new();
        for &(q, _) in registers {
            ids.push(state.init_register(q, InitKind::Zeros)?);
        }
        let pairs: Vec<(RegId, u32)> = ids
            .iter()
            .copied()
            .zip(registers.iter().map(|r| r.1))
            .collect();
        let idx = basis_index(&state.layout, &pairs)?;
        state.amps.swap(0, idx);
        Ok((state, ids))
    }

    /// Largest elementwise distance to another state with the same dimension.
    pub fn max_distance(&self, other: &Statevector) -> f64 {
        assert_eq!(self.amps.len(), other.amps.len(), "dimension mismatch");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn debug_json(&self) -> Result<serde_json::Value> {
        let nonzero: Vec<(usize, f64, f64)> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 1e-24)
            .map(|(i, a)| (i, a.re, a.im))
            .collect();
        if nonzero.len() > DEBUG_DUMP_LIMIT {
            return Err(RfsError::contract(format!(
                "{} nonzero amplitudes exceeds the dump limit of {DEBUG_DUMP_LIMIT}",
                nonzero.len()
            )));
        }
        Ok(serde_json::json!({
            "layout": self.layout,
            "nonzero": nonzero,
        }))
    }
}

/// Basis index of a register assignment, given `(register, value)` pairs.
pub fn basis_index(layout: &RegisterLayout, values: &[(RegId, u32)]) -> Result<usize> {
    let mut idx = 0usize;
    for &(reg, v) in values {
        let (off, mask) = layout.field(reg)?;
        if v as usize > mask {
            return Err(RfsError::contract(format!(
                "value {v} too wide for {reg:?}"
            )));
        }
        idx |= (v as usize) << off;
    }
    Ok(idx)
}

/// Amplitude vector of `2^(-n/2) sum_x (-1)^(s.x) |x>` over `s.width()` qubits.
pub fn phase_state(s: &BitString) -> Vec<Complex64> {
    let dim = 1usize << s.width();
    let scale = (dim as f64).sqrt().recip();
    (0..dim)
        .map(|x| {
            let sign = if (x as u32 & s.value()).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            Complex64::new(sign * scale, 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn init_kinds() {
        let mut s = Statevector::new();
        s.init_register(1, InitKind::Minus).unwrap();
        assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2)).norm() < TOL);
        assert!((s.amplitudes()[1] - c(-FRAC_1_SQRT_2)).norm() < TOL);

        let mut s = Statevector::new();
        s.init_register(2, InitKind::UniformSuperposition).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a - c(0.5)).norm() < TOL));

        let mut s = Statevector::new();
        s.init_register(3, InitKind::Zeros).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn minus_needs_one_qubit() {
        let mut s = Statevector::new();
        assert!(matches!(
            s.init_register(2, InitKind::Minus),
            Err(RfsError::Contract(_))
        ));
    }

    #[test]
    fn qubit_budget_enforced() {
        let mut s = Statevector::new();
        assert!(s.init_register(MAX_QUBITS + 1, InitKind::Zeros).is_err());
    }

    #[test]
    fn hadamard_zero_to_uniform_and_back() {
        let mut s = Statevector::new();
        let x = s.init_register(3, InitKind::Zeros).unwrap();
        s.hadamard_all(x).unwrap();
        let (reference, _) = Statevector::from_registers(
            &[(3, InitKind::UniformSuperposition)],
            vec![c(8f64.sqrt().recip()); 8],
        )
        .unwrap();
        assert!(s.max_distance(&reference) < 1e-9);
        s.hadamard_all(x).unwrap();
        assert!((s.amplitudes()[0] - c(1.0)).norm() < 1e-9);
    }

    #[test]
    fn hadamard_decodes_phase_state() {
        for n in 1..=6 {
            for v in [0u32, 1, (1 << n) - 1, 0b101 & ((1 << n) - 1)] {
                let s = BitString::new(n, v).unwrap();
                let (mut state, ids) =
                    Statevector::from_registers(&[(n, InitKind::Zeros)], phase_state(&s)).unwrap();
                state.hadamard_all(ids[0]).unwrap();
                let (got, mass) = state.measure_deterministic(ids[0], 1e-9).unwrap();
                assert_eq!(got, v);
                assert!((mass - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hadamard_acts_on_one_register_only() {
        let mut s = Statevector::new();
        let a = s.init_register(2, InitKind::Zeros).unwrap();
        let b = s.init_register(1, InitKind::Zeros).unwrap();
        let cc = s.init_register(2, InitKind::Zeros).unwrap();
        s.hadamard_all(b).unwrap();
        assert!((s.register_distribution(a).unwrap()[0] - 1.0).abs() < TOL);
        assert!((s.register_distribution(cc).unwrap()[0] - 1.0).abs() < TOL);
        let d = s.register_distribution(b).unwrap();
        assert!((d[0] - 0.5).abs() < TOL && (d[1] - 0.5).abs() < TOL);
    }

    #[test]
    fn g_gate_examples() {
        let src: BitString = "0100".parse().unwrap();
        let (mut s, ids) = Statevector::basis_state(&[(4, src.value()), (1, 0)]).unwrap();
        let (x, y) = (ids[0], ids[1]);
        s.g_gate(x, y, GVariant::HammingMod3).unwrap();
        assert_eq!(s.measure_deterministic(y, 1e-12).unwrap().0, 1);
        assert_eq!(s.measure_deterministic(x, 1e-12).unwrap().0, src.value());
        s.g_gate(x, y, GVariant::HammingMod3).unwrap();
        assert_eq!(s.measure_deterministic(y, 1e-12).unwrap().0, 0);
    }

    #[test]
    fn g_gate_phase_kickback() {
        for v in 0..16u32 {
            let s_bits = BitString::new(4, v).unwrap();
            let mut s = Statevector::new();
            let x = s.init_register(4, InitKind::Zeros).unwrap();
            let y = s.init_register(1, InitKind::Minus).unwrap();
            let i0 = basis_index(s.layout(), &[(x, v)]).unwrap();
            let mut amps = s.amplitudes().to_vec();
            amps.swap(0, i0);
            amps.swap(1, i0 | 1);
            s.amps = amps;
            let before = s.clone();
            s.g_gate(x, y, GVariant::HammingMod3).unwrap();
            let sign = if crate::bits::g_eval(&s_bits, GVariant::HammingMod3) {
                -1.0
            } else {
                1.0
            };
            for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
                assert!((a - b * sign).norm() < TOL);
            }
            assert!(s.verify_discard(&[y]));
        }
    }

    #[test]
    fn discard_checks_initial_state() {
        let mut s = Statevector::new();
        let x = s.init_register(2, InitKind::UniformSuperposition).unwrap();
        let y = s.init_register(1, InitKind::Minus).unwrap();
        assert!(s.verify_discard(&[x, y]));
        assert!(s.verify_discard(&[y]));
        s.hadamard_all(x).unwrap();
        // now |00>: a product state, but not the initial one
        assert!(!s.verify_discard(&[x]));
        assert!(s.discard(&[x]).is_err());
        s.hadamard_all(x).unwrap();
        s.discard(&[y]).unwrap();
        assert_eq!(s.layout().total_qubits(), 2);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discard_rejects_entanglement() {
        let mut s = Statevector::new();
        let x = s.init_register(1, InitKind::UniformSuperposition).unwrap();
        let y = s.init_register(1, InitKind::Zeros).unwrap();
        s.xor_function(&[x], y, |v| v[0] == 1).unwrap();
        assert!(!s.verify_discard(&[y]));
        assert!(!s.verify_discard(&[x]));
    }

    #[test]
    fn discard_middle_register_keeps_others() {
        let mut s = Statevector::new();
        let a = s.init_register(1, InitKind::Zeros).unwrap();
        let mid = s.init_register(2, InitKind::UniformSuperposition).unwrap();
        let b = s.init_register(1, InitKind::Zeros).unwrap();
        s.xor_function(&[], a, |_| true).unwrap();
        s.discard(&[mid]).unwrap();
        assert_eq!(s.measure_deterministic(a, 1e-12).unwrap().0, 1);
        assert_eq!(s.measure_deterministic(b, 1e-12).unwrap().0, 0);
        assert_eq!(s.amplitudes().len(), 4);
    }

    #[test]
    fn nondeterministic_measurement_is_an_error() {
        let mut s = Statevector::new();
        let x = s.init_register(1, InitKind::UniformSuperposition).unwrap();
        assert!(matches!(
            s.measure_deterministic(x, 1e-6),
            Err(RfsError::SimulationIntegrity(_))
        ));
    }

    #[test]
    fn dyadic_check() {
        let mut s = Statevector::new();
        s.init_register(3, InitKind::UniformSuperposition).unwrap();
        s.init_register(1, InitKind::Minus).unwrap();
        assert!(s.is_dyadic_real(1e-9));
        s.amps[0] = c(0.3);
        assert!(!s.is_dyadic_real(1e-9));
    }

    #[test]
    fn debug_dump() {
        let mut s = Statevector::new();
        s.init_register(1, InitKind::Minus).unwrap();
        let v = s.debug_json().unwrap();
        assert_eq!(v["nonzero"].as_array().unwrap().len(), 2);
        assert_eq!(v["layout"]["registers"][0]["init"], "minus");
        let mut big = Statevector::new();
        big.init_register(13, InitKind::UniformSuperposition)
            .unwrap();
        assert!(big.debug_json().is_err());
    }
}
