use polarflip::code::PolarCode;
use polarflip::partition_design::non_frozen_counts;

// Information sets computed by a separate double-precision implementation of
// the same Gaussian approximation (plain phi, root-bracketed inverse).

#[test]
fn ga_n64_k32_at_1_0db() {
    let code = PolarCode::construct(64, 32, 1.0).unwrap();
    let expected: Vec<usize> = vec![15, 23, 26, 27, 28, 29, 30, 31, 38, 39, 41, 42, 43, 44, 45, 46, 47, 49, 50, 51, 52, 53, 54, 55, 56, 57, 58, 59, 60, 61, 62, 63];
    assert_eq!(code.info_set(), &expected[..]);
}

#[test]
fn ga_n128_k64_at_2_0db() {
    let code = PolarCode::construct(128, 64, 2.0).unwrap();
    let expected: Vec<usize> = vec![30, 31, 45, 46, 47, 51, 53, 54, 55, 57, 58, 59, 60, 61, 62, 63, 71, 75, 77, 78, 79, 83, 84, 85, 86, 87, 88, 89, 90, 91, 92, 93, 94, 95, 98, 99, 100, 101, 102, 103, 104, 105, 106, 107, 108, 109, 110, 111, 112, 113, 114, 115, 116, 117, 118, 119, 120, 121, 122, 123, 124, 125, 126, 127];
    assert_eq!(code.info_set(), &expected[..]);
}

#[test]
fn ga_n256_k96_at_0_0db() {
    let code = PolarCode::construct(256, 96, 0.0).unwrap();
    let expected: Vec<usize> = vec![63, 94, 95, 107, 109, 110, 111, 115, 117, 118, 119, 121, 122, 123, 124, 125, 126, 127, 151, 155, 157, 158, 159, 167, 171, 173, 174, 175, 178, 179, 180, 181, 182, 183, 184, 185, 186, 187, 188, 189, 190, 191, 199, 201, 202, 203, 204, 205, 206, 207, 209, 210, 211, 212, 213, 214, 215, 216, 217, 218, 219, 220, 221, 222, 223, 225, 226, 227, 228, 229, 230, 231, 232, 233, 234, 235, 236, 237, 238, 239, 240, 241, 242, 243, 244, 245, 246, 247, 248, 249, 250, 251, 252, 253, 254, 255];
    assert_eq!(code.info_set(), &expected[..]);
}

#[test]
fn long_code_partition_counts() {
    let code = PolarCode::construct(1024, 544, 2.0).unwrap();
    assert_eq!(non_frozen_counts(code.info_set(), &[410, 590, 708, 1023]), vec![61, 100, 84, 299]);
}

#[test]
fn sets_are_nested_at_fixed_rate() {
    use polarflip::code::construct_info_set_at_rate;
    let big = construct_info_set_at_rate(512, 300, 1.5, 0.5).unwrap();
    let small = construct_info_set_at_rate(512, 200, 1.5, 0.5).unwrap();
    assert!(small.iter().all(|i| big.binary_search(i).is_ok()));
}
