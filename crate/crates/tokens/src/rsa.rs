//! Minimal RSA primitives for blind signatures: key generation, raw CRT
//! signing, and a fast fixed-exponent verification power.
//!
//! Raw modular exponentiation is deliberately exposed — the blind-signature
//! protocol multiplies into the signer's input — so these keys must never be
//! shared with any padded-RSA use.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

/// Public verification exponent, fixed for all generated keys.
pub const PUBLIC_EXPONENT: u64 = 65_537;

/// Miller-Rabin rounds; 40 gives a < 2^-80 error bound at these sizes.
const MILLER_RABIN_ROUNDS: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaPublicKey {
    pub n: BigUint,
    pub e: u64,
}

impl RsaPublicKey {
    /// Modulus size in whole bytes.
    pub fn modulus_len(&self) -> usize {
        ((self.n.bits() + 7) / 8) as usize
    }

    /// `x^e mod n` via square-and-multiply over the bits of `e`.
    ///
    /// The generic Montgomery path in the bignum crate sets up a window
    /// table sized for full-width exponents; for a 17-bit public exponent
    /// the plain loop is several times faster, which matters at
    /// tens-of-thousands of verifies per second.
    pub fn pow_public(&self, x: &BigUint) -> BigUint {
        let mut acc = BigUint::one();
        let mut bit = 63 - self.e.leading_zeros() as i32;
        while bit >= 0 {
            acc = (&acc * &acc) % &self.n;
            if (self.e >> bit) & 1 == 1 {
                acc = (&acc * x) % &self.n;
            }
            bit -= 1;
        }
        acc
    }
}

/// Private key with the precomputed CRT parameters.
#[derive(Debug, Clone)]
pub struct RsaKeyPair {
    pub public: RsaPublicKey,
    d: BigUint,
    p: BigUint,
    q: BigUint,
    dp: BigUint,
    dq: BigUint,
    qinv: BigUint,
}

impl RsaKeyPair {
    /// Generate a keypair with a modulus of `bits` (two `bits/2` primes).
    pub fn generate<R: RngCore + CryptoRng>(bits: u64, rng: &mut R) -> RsaKeyPair {
        assert!(bits >= 64 && bits % 2 == 0, "modulus bits must be even and >= 64");
        let e = BigUint::from(PUBLIC_EXPONENT);
        loop {
            let p = gen_prime(bits / 2, &e, rng);
            let q = gen_prime(bits / 2, &e, rng);
            if p == q {
                continue;
            }
            let n = &p * &q;
            if n.bits() != bits {
                continue;
            }
            let one = BigUint::one();
            let phi = (&p - &one) * (&q - &one);
            let d = match e.clone().modinv(&phi) {
                Some(d) => d,
                None => continue,
            };
            let dp = &d % (&p - &one);
            let dq = &d % (&q - &one);
            let qinv = q.clone().modinv(&p).expect("p prime, q != p");
            return RsaKeyPair {
                public: RsaPublicKey { n, e: PUBLIC_EXPONENT },
                d,
                p,
                q,
                dp,
                dq,
                qinv,
            };
        }
    }

    /// Rebuild the CRT parameters from stored (n, d, p, q).
    pub fn from_parts(n: BigUint, d: BigUint, p: BigUint, q: BigUint) -> RsaKeyPair {
        let one = BigUint::one();
        let dp = &d % (&p - &one);
        let dq = &d % (&q - &one);
        let qinv = q.clone().modinv(&p).expect("invalid key parts");
        RsaKeyPair {
            public: RsaPublicKey { n, e: PUBLIC_EXPONENT },
            d,
            p,
            q,
            dp,
            dq,
            qinv,
        }
    }

    pub fn private_parts(&self) -> (&BigUint, &BigUint, &BigUint) {
        (&self.d, &self.p, &self.q)
    }

    /// Raw `x^d mod n` via the Chinese remainder theorem.
    pub fn pow_private(&self, x: &BigUint) -> BigUint {
        let m1 = x.modpow(&self.dp, &self.p);
        let m2 = x.modpow(&self.dq, &self.q);
        let h = ((&m1 + &self.p - &m2 % &self.p) * &self.qinv) % &self.p;
        &m2 + &h * &self.q
    }
}

fn small_primes() -> &'static [u32] {
    use std::sync::OnceLock;
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 8192usize;
        let mut sieve = vec![true; limit];
        let mut primes = Vec::new();
        for i in 2..limit {
            if sieve[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j < limit {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        primes
    })
}

fn gen_prime<R: RngCore + CryptoRng>(bits: u64, e: &BigUint, rng: &mut R) -> BigUint {
    let one = BigUint::one();
    loop {
        let mut c = rng.gen_biguint(bits);
        c.set_bit(bits - 1, true);
        c.set_bit(bits - 2, true); // keep p*q at full width
        c.set_bit(0, true);
        if !passes_trial_division(&c) {
            continue;
        }
        if (&c - &one).gcd(e) != one {
            continue;
        }
        if is_probable_prime(&c, rng) {
            return c;
        }
    }
}

fn passes_trial_division(n: &BigUint) -> bool {
    for &p in small_primes() {
        let bp = BigUint::from(p);
        if (n % &bp).is_zero() {
            return n == &bp;
        }
    }
    true
}

/// Miller-Rabin with random bases.
fn is_probable_prime<R: RngCore + CryptoRng>(n: &BigUint, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = &one + &one;
    if n < &two {
        return false;
    }
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n odd, n > 2");
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sign_verify_round_trip_small_key() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let kp = RsaKeyPair::generate(512, &mut rng);
        assert_eq!(kp.public.n.bits(), 512);
        for _ in 0..20 {
            let m = rng.gen_biguint_below(&kp.public.n);
            let sig = kp.pow_private(&m);
            assert_eq!(kp.public.pow_public(&sig), m);
        }
    }

    #[test]
    fn crt_matches_plain_exponentiation() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let kp = RsaKeyPair::generate(512, &mut rng);
        let m = rng.gen_biguint_below(&kp.public.n);
        let plain = m.modpow(&kp.d, &kp.public.n);
        assert_eq!(kp.pow_private(&m), plain);
    }

    #[test]
    fn pow_public_matches_generic_modpow() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = RsaKeyPair::generate(512, &mut rng);
        let e = BigUint::from(PUBLIC_EXPONENT);
        for _ in 0..50 {
            let x = rng.gen_biguint_below(&kp.public.n);
            assert_eq!(kp.public.pow_public(&x), x.modpow(&e, &kp.public.n));
        }
    }

    #[test]
    fn distinct_keys_have_distinct_moduli() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let a = RsaKeyPair::generate(512, &mut rng);
        let b = RsaKeyPair::generate(512, &mut rng);
        assert_ne!(a.public.n, b.public.n);
    }

    #[test]
    fn from_parts_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let kp = RsaKeyPair::generate(512, &mut rng);
        let (d, p, q) = kp.private_parts();
        let rebuilt =
            RsaKeyPair::from_parts(kp.public.n.clone(), d.clone(), p.clone(), q.clone());
        let m = rng.gen_biguint_below(&kp.public.n);
        assert_eq!(rebuilt.pow_private(&m), kp.pow_private(&m));
    }
}
