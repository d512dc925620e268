//! Burrows-Wheeler transform over cyclic rotations (no sentinel byte).
//!
//! Rotations are sorted by prefix doubling: each round ranks rotations by
//! their first `2^h` bytes using a pair of counting sorts, so equal rotations
//! of a periodic input end up sharing a class. The primary index is the row
//! of rotation 0, which is the first row of its class.

use super::CompressError;

/// Sorted rotation order and final equivalence classes of `input`.
pub(crate) fn sort_rotations(input: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let n = input.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    assert!(n < u32::MAX as usize, "block too large");

    let mut count = vec![0u32; 256.max(n)];
    for &b in input {
        count[b as usize] += 1;
    }
    for i in 1..256 {
        count[i] += count[i - 1];
    }
    let mut order = vec![0u32; n];
    for i in (0..n).rev() {
        let b = input[i] as usize;
        count[b] -= 1;
        order[count[b] as usize] = i as u32;
    }

    let mut class = vec![0u32; n];
    let mut classes = 1usize;
    for i in 1..n {
        if input[order[i] as usize] != input[order[i - 1] as usize] {
            classes += 1;
        }
        class[order[i] as usize] = (classes - 1) as u32;
    }

    let mut shifted = vec![0u32; n];
    let mut next_class = vec![0u32; n];
    let mut half = 1usize;
    let wrap = |i: usize, d: usize| if i + d >= n { i + d - n } else { i + d };
    while half < n && classes < n {
        // Order by second half is the current order shifted back by `half`.
        for (s, &o) in shifted.iter_mut().zip(&order) {
            *s = wrap(o as usize, n - half) as u32;
        }
        count[..classes].iter_mut().for_each(|c| *c = 0);
        for &s in &shifted {
            count[class[s as usize] as usize] += 1;
        }
        for i in 1..classes {
            count[i] += count[i - 1];
        }
        for &s in shifted.iter().rev() {
            let c = class[s as usize] as usize;
            count[c] -= 1;
            order[count[c] as usize] = s;
        }

        let key = |i: u32| {
            let i = i as usize;
            (u64::from(class[i]) << 32) | u64::from(class[wrap(i, half)])
        };
        let mut prev = key(order[0]);
        next_class[order[0] as usize] = 0;
        classes = 1;
        for &o in &order[1..] {
            let cur = key(o);
            if cur != prev {
                classes += 1;
                prev = cur;
            }
            next_class[o as usize] = (classes - 1) as u32;
        }
        std::mem::swap(&mut class, &mut next_class);
        half <<= 1;
    }
    (
        order.into_iter().map(|o| o as usize).collect(),
        class.into_iter().map(|c| c as usize).collect(),
    )
}

/// Last column of the sorted rotation matrix plus the row holding the input.
pub fn bwt_forward(input: &[u8]) -> (Vec<u8>, usize) {
    let n = input.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    let (order, class) = sort_rotations(input);
    let last = order.iter().map(|&i| input[(i + n - 1) % n]).collect();
    let primary = order
        .iter()
        .position(|&i| class[i] == class[0])
        .expect("rotation 0 is present in the order");
    (last, primary)
}

pub fn bwt_inverse(last: &[u8], primary: usize) -> Result<Vec<u8>, CompressError> {
    let n = last.len();
    if n == 0 {
        return if primary == 0 {
            Ok(Vec::new())
        } else {
            Err(CompressError::IndexOutOfRange { index: primary, len: 0 })
        };
    }
    if primary >= n {
        return Err(CompressError::IndexOutOfRange { index: primary, len: n });
    }

    let mut starts = [0usize; 256];
    for &b in last {
        starts[b as usize] += 1;
    }
    let mut sum = 0;
    for s in starts.iter_mut() {
        let c = *s;
        *s = sum;
        sum += c;
    }
    let mut lf = vec![0usize; n];
    for (i, &b) in last.iter().enumerate() {
        lf[i] = starts[b as usize];
        starts[b as usize] += 1;
    }

    let mut out = vec![0u8; n];
    let mut row = primary;
    for slot in out.iter_mut().rev() {
        *slot = last[row];
        row = lf[row];
    }
    Ok(out)
}
