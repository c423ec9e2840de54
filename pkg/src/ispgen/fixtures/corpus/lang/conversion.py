def int_array_to_long(src: list[int], src_pos: int, dst_init: int, dst_pos: int, n_ints: int) -> int:
    """Pack ``n_ints`` 32-bit ints from ``src`` into a 64-bit long.

    Raises:
        ValueError: if ``(n_ints - 1) * 32 + dst_pos >= 64``.
        IndexError: if ``src_pos + n_ints > len(src)``.
    """
    if (len(src) == 0 and src_pos == 0) or n_ints == 0:
        return dst_init
    if (n_ints - 1) * 32 + dst_pos >= 64:
        raise ValueError("(n_ints - 1) * 32 + dst_pos is greater or equal to than 64")
    out = dst_init
    for i in range(n_ints):
        shift = i * 32 + dst_pos
        bits = (0xFFFFFFFF & src[i + src_pos]) << shift
        mask = 0xFFFFFFFF << shift
        out = (out & ~mask) | bits
    return out
