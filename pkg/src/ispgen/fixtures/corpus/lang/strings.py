def to_string(name: str, *properties: object) -> str:
    """Format ``name[key=value, ...]`` from alternating keys and values."""
    buffer = [name, "["]
    i = 0
    while i < len(properties):
        key = properties[i]
        i += 1
        value = properties[i]
        if value is not None:
            if len(buffer) > 2:
                buffer.append(", ")
            buffer.append(f"{key}={value}")
        i += 1
    buffer.append("]")
    return "".join(buffer)
