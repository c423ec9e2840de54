from apfloat._decl import throws


@throws(ValueError)
def create_number(text: str):
    """Turn a string into the narrowest numeric type that represents it."""
    if text is None:
        return None
    if not text.strip():
        raise ValueError("a blank string is not a valid number")
    if text.startswith(("0x", "0X", "-0x", "-0X")):
        return int(text, 16)
    if "." in text or "e" in text.lower():
        return float(text)
    return int(text)
