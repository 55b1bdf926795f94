# UI package