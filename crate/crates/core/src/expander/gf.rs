//! Arithmetic in GF(2^m) for 2 <= m <= 16 via log/antilog tables.

const PRIMITIVE: [u32; 17] = [
    0, 0, 0x7, 0xb, 0x13, 0x25, 0x43, 0x89, 0x11d, 0x211, 0x409, 0x805, 0x1053, 0x201b, 0x4443,
    0x8003, 0x1100b,
];

#[derive(Clone, Debug)]
pub struct Gf {
    bits: u32,
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Gf {
    pub fn new(bits: u32) -> Gf {
        assert!((2..=16).contains(&bits), "field width {bits} unsupported");
        let size = 1usize << bits;
        let order = size - 1;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; size];
        let mut v = 1u32;
        for e in 0..order {
            exp[e] = v as u16;
            log[v as usize] = e as u16;
            v <<= 1;
            if v & size as u32 != 0 {
                v ^= PRIMITIVE[bits as usize];
            }
        }
        for e in order..2 * order {
            exp[e] = exp[e - order];
        }
        Gf {
            bits,
            order,
            exp,
            log,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        self.order + 1
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        assert!(a != 0, "zero has no inverse");
        self.exp[(self.order - self.log[a as usize] as usize) % self.order]
    }

    #[inline]
    pub fn div(&self, a: u16, b: u16) -> u16 {
        self.mul(a, self.inv(b))
    }

    /// Value at `x` of the polynomial through `(xs[j], ys[j])`.
    pub fn interpolate(&self, xs: &[u16], ys: &[u16], x: u16) -> u16 {
        let mut acc = 0u16;
        for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
            let mut num = 1u16;
            let mut den = 1u16;
            for (m, &xm) in xs.iter().enumerate() {
                if m != j {
                    num = self.mul(num, x ^ xm);
                    den = self.mul(den, xj ^ xm);
                }
            }
            acc ^= self.mul(yj, self.div(num, den));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_small_widths() {
        for bits in 2..=8 {
            let f = Gf::new(bits);
            // exp table must visit every nonzero element once
            let mut seen = vec![false; f.size()];
            for e in 0..f.size() - 1 {
                assert!(!seen[f.exp[e] as usize]);
                seen[f.exp[e] as usize] = true;
            }
            for a in 1..f.size() as u16 {
                assert_eq!(f.mul(a, f.inv(a)), 1);
                for b in 1..f.size() as u16 {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.div(f.mul(a, b), b), a);
                }
            }
        }
    }

    #[test]
    fn wide_fields_are_primitive() {
        for bits in 9..=16 {
            let f = Gf::new(bits);
            let distinct: std::collections::HashSet<u16> = f.exp[..f.order].iter().copied().collect();
            assert_eq!(distinct.len(), f.order);
        }
    }

    #[test]
    fn interpolation_reproduces_points() {
        let f = Gf::new(8);
        let xs = [0u16, 1, 2, 3];
        let ys = [17u16, 200, 3, 99];
        for (x, y) in xs.iter().zip(ys) {
            assert_eq!(f.interpolate(&xs, &ys, *x), y);
        }
    }
}
