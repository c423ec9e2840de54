def throws(*exception_types):
    """Declare the exceptions a function may raise; no runtime effect."""

    def mark(func):
        func.__throws__ = exception_types
        return func

    return mark
