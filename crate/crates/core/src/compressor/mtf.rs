//! Move-to-front coding over the 256-symbol alphabet, initialised in ascending byte order.

fn initial_list() -> [u8; 256] {
    std::array::from_fn(|i| i as u8)
}

pub fn mtf_encode(input: &[u8]) -> Vec<u8> {
    let mut list = initial_list();
    input
        .iter()
        .map(|&b| {
            let pos = list.iter().position(|&x| x == b).expect("every byte is in the list");
            list.copy_within(0..pos, 1);
            list[0] = b;
            pos as u8
        })
        .collect()
}

pub fn mtf_decode(input: &[u8]) -> Vec<u8> {
    let mut list = initial_list();
    input
        .iter()
        .map(|&r| {
            let pos = r as usize;
            let b = list[pos];
            list.copy_within(0..pos, 1);
            list[0] = b;
            b
        })
        .collect()
}
